"""
Scoring every segmentation of a word
====================================

The segmental model scores each (span, tag) pair of a word once and combines
those scores with a semi-Markov dynamic program.  This script builds a small
untrained model, compares its partition function with a sum over every
segmentation, then trains it on a handful of words and decodes.
"""

# %%
# Enumerating by hand
# -------------------
# A 4-character word has 2**3 segmentations.  Every segment can carry either
# language tag (decoding later merges equal neighbours), while the seven
# special tags are only scored on the whole word: 9 + 3*4 + 3*8 + 16 = 61.

import itertools
import math

import numpy as np

from subword_lid import segrnn
from subword_lid.corpus import DE_TR, parse_corpus
from subword_lid.semimarkov import viterbi

model = segrnn.SegRNNModel(list("Schatzym"), DE_TR, segrnn.SegRNNConfig(seed=0))
word = "atzy"
lattice = segrnn.score_lattice(model, segrnn.encode_word(model, word))

total = []
for mask in range(2 ** (len(word) - 1)):
    cuts = [k for k in range(1, len(word)) if mask >> (k - 1) & 1]
    spans = list(zip([0] + cuts, cuts + [len(word)]))
    for tags in itertools.product(range(len(model.tags)), repeat=len(spans)):
        score = sum(lattice.phi(i, j, y) for (i, j), y in zip(spans, tags))
        if np.isfinite(score):
            total.append(score)

brute = max(total) + math.log(sum(math.exp(s - max(total)) for s in total))
print(f"parses with finite score: {len(total)}")
print(f"log Z by dynamic program: {segrnn.log_partition(lattice):.12f}")
print(f"log Z by enumeration:     {brute:.12f}")

(spans, tag_ids), score = viterbi(lattice)
print("best parse of the untrained model:", [(word[i:j], model.tags[y]) for (i, j), y in zip(spans, tag_ids)],
      f"score {score:.4f}")

# %%
# Training on a few words
# -----------------------
# A few epochs on a toy corpus are enough for the model to learn where the
# Turkish suffix starts.

toy = parse_corpus("""\
Schatzym\tSchatzy|m\tDE|TR
Hausum\tHaus|um\tDE|TR
danke\tdanke\tDE
seni\tseni\tTR
""", DE_TR)
config = segrnn.SegRNNConfig(epochs=40, seed=2)
model = segrnn.model_for_corpus(toy, config)
log = segrnn.train(model, toy, config)
print(f"loss: first epoch {log.epoch_losses[0]:.3f}, last epoch {log.epoch_losses[-1]:.3f}")
for w in ("Schatzym", "danke", "Hausum"):
    tok = segrnn.decode(model, w)
    print(w, "->", list(zip(tok.pieces, tok.tags)))
