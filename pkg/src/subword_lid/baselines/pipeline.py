"""Word tagger followed by a segmenter for the words tagged with composite tags."""
from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence

from ..corpus import SegmentedToken
from .crf import CRFSegmenter, SegmentationError

FALLBACK = "segmenter_fallback"

Tagger = Callable[[Sequence[str]], List[str]]


def pipeline_predict(tagger: Tagger, segmenter: CRFSegmenter, words: Sequence[str],
                     diagnostics: Optional[Dict[str, int]] = None) -> List[SegmentedToken]:
    """Tag ``words`` with composed tags, then split the composite ones.

    A composite tag the segmenter cannot realise (more parts than characters)
    falls back to one segment carrying its first tag; each such case is counted
    under ``diagnostics[FALLBACK]``.
    """
    tags = tagger(words)
    if len(tags) != len(words):
        raise ValueError(f"tagger returned {len(tags)} tags for {len(words)} words")
    out = []
    sep = segmenter.tagset.separator
    for word, tag in zip(words, tags):
        if sep not in tag:
            out.append(SegmentedToken.single(word, tag))
            continue
        try:
            out.append(segmenter.segment(word, tag))
        except SegmentationError:
            if diagnostics is not None:
                diagnostics[FALLBACK] = diagnostics.get(FALLBACK, 0) + 1
            out.append(SegmentedToken.single(word, tag.split(sep)[0]))
    return out
