"""Comparison systems: character tagger, and word tagger + segmenter pipelines."""
from .crf import (CRFConfig, CRFSegmenter, CRFTagger, FeatureCRF, SegmentationError, crf_segmenter_segment,
                  crf_segmenter_train, crf_tagger_predict, crf_tagger_train)
from .neural import (CharTaggerModel, TaggerConfig, WordTaggerModel, char_tagger_predict, char_tagger_train,
                     word_tagger_predict, word_tagger_train)
from .pipeline import pipeline_predict

__all__ = [
    "CRFConfig", "CRFSegmenter", "CRFTagger", "FeatureCRF", "SegmentationError", "crf_segmenter_segment",
    "crf_segmenter_train", "crf_tagger_predict", "crf_tagger_train", "CharTaggerModel", "TaggerConfig",
    "WordTaggerModel", "char_tagger_predict", "char_tagger_train", "word_tagger_predict", "word_tagger_train",
    "pipeline_predict",
]
