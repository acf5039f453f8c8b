"""
Reading annotated words and scoring predictions
===============================================

Each corpus line holds a surface word, its pieces joined by ``|`` and one
language tag per piece.  This walk-through parses a few lines, prints the
token statistics table and scores a prediction that fails to split a mixed
word.
"""

# %%
# Parsing
# -------
# ``Schatzym`` is a German root with a Turkish possessive suffix, so it has
# two segments.  Unmixed words are a single segment.

from subword_lid.corpus import DE_TR, SegmentedToken, compute_stats, parse_corpus, serialize_corpus
from subword_lid.metrics import evaluate, render_table

text = """\
# a short DE-TR sentence
Yerim\tYerim\tTR
seni\tseni\tTR
,\t,\tOTHER
danke\tdanke\tDE
Schatzym\tSchatzy|m\tDE|TR
"""
corpus = parse_corpus(text, DE_TR)
for tok in corpus.tokens():
    print(f"{tok.surface:<10} {[(s.start, s.end, s.tag) for s in tok.segments]}")

assert serialize_corpus(corpus) == text + "\n"

# %%
# Token statistics
# ----------------
# Mixed words are counted once under ``MIXED`` and broken down by their tag
# sequence below the main rows.

print(compute_stats(corpus).to_text())

# %%
# Scoring
# -------
# A prediction that leaves ``Schatzym`` whole gets one of its eight characters
# wrong and misses both gold segments of the word.

pred = [[tok if not tok.is_mixed else SegmentedToken.single(tok.surface, "DE") for tok in corpus.tokens()]]
report = evaluate(corpus, pred)
print(render_table({"unsplit": report}))
print(render_table({"unsplit": report}, mixed=True))
print("undersegmentation rate:", report.underseg_rate)
