import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from subword_lid.corpus import Corpus, Segment, SegmentedToken, Sentence, TagSet

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FUZZ_TAGSET = TagSet(("AA", "BB", "CC"), ("OTHER", "NE.AA"))

# letters include non-ASCII scalar values and the segment delimiter "|"
_CHARS = st.sampled_from(list("abcxyzɨüñöß|.,?1#"))


@st.composite
def tokens(draw, tagset: TagSet = FUZZ_TAGSET):
    surface = draw(st.text(_CHARS, min_size=1, max_size=9))
    if "|" in surface or len(surface) == 1 or draw(st.booleans()):
        return SegmentedToken.single(surface, draw(st.sampled_from(tagset.all_tags)))
    n = len(surface)
    cuts = sorted(draw(st.sets(st.integers(1, n - 1), min_size=1, max_size=min(3, n - 1))))
    bounds = [0] + cuts + [n]
    tags = []
    for _ in range(len(bounds) - 1):
        choices = [t for t in tagset.monolingual if not tags or t != tags[-1]]
        tags.append(draw(st.sampled_from(choices)))
    return SegmentedToken(surface, tuple(Segment(i, j, t) for i, j, t in zip(bounds, bounds[1:], tags)))


@st.composite
def corpora(draw, tagset: TagSet = FUZZ_TAGSET, max_sentences: int = 5):
    n = draw(st.integers(0, max_sentences))
    sents = []
    for _ in range(n):
        toks = draw(st.lists(tokens(tagset), min_size=1, max_size=6))
        comment = draw(st.one_of(st.none(), st.text(st.sampled_from(list("ab #x\n")), max_size=8)))
        sents.append(Sentence(tuple(toks), comment))
    return Corpus(tuple(sents), tagset)

# acceptance results, one (criterion, passed, detail) per criterion, echoed in the terminal summary
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
