"""Confidence-calibration toolkit for multilingual QA prediction logs."""

from .analysis import (CorrelationReport, LanguageFeatureRow, LanguageMetricsRow,
                       correlate_ece_with_features, load_features_csv, macro_average,
                       parallel_confidence_correlation, pearson, per_language_table,
                       transfer_report)
from .calibrators import (FitConfig, SmoothingConfig, fit_dual_temperature,
                          fit_generative_temperature, fit_single_temperature,
                          nll_position, smooth_span_targets, smooth_targets,
                          write_smoothing_targets)
from .candidate_extraction import (ExtractionConfig, Span, extract_top_k_spans,
                                   top_k_spans)
from .confidence_scoring import (ScoredPrediction, TemperatureParams,
                                 confidences_for, extractive_confidences,
                                 generative_confidences, score_record, score_records)
from .corpus_assembly import (Corpus, MixConfig, ParallelCorpusEntry,
                              PromptManifestEntry, build_fewshot_manifest,
                              build_mix_manifest, load_corpus, render_prompt,
                              select_icl_examples)
from .errors import (CorpusError, CorrelationError, EmptyInputError, FitError,
                     FitWarning, KindMismatchError, LogWarning, NoValidSpanError,
                     QacalibError, SchemaError)
from .prediction_log import (KNOWN_LANGUAGES, MODEL_KINDS, SPLITS, CandidateAnswer,
                             PredictionRecord, SpanLogitRecord, load_prediction_log,
                             load_span_log, parse_log, parse_span_log,
                             partition_by_language, serialize_record,
                             serialize_span_record, write_prediction_log,
                             write_span_log)
from .qa_metrics import (BinRow, BinningConfig, ReliabilityTable, bin_index,
                         compute_ece, contains_match, exact_match,
                         format_reliability_csv, normalize_answer, reliability_bins)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
