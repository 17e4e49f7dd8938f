"""textsiege: black-box adversarial attacks and robustness evaluation for
multilingual text classifiers.

The package is organized around the campaign flow: load a labeled corpus
(:mod:`textsiege.corpus`), reach a victim classifier through the black-box
contract (:mod:`textsiege.victim`), retrieve substitution candidates from
word vectors (:mod:`textsiege.embeddings`), attack with word substitution or
round-trip translation (:mod:`textsiege.attacks`), and score the damage
(:mod:`textsiege.evaluation`). The ``textsiege`` CLI drives all of it from a
single config file.
"""

from .corpus import (
    LabelDistribution,
    LabeledDataset,
    LanguageInfo,
    Sample,
    Tier,
    empirical_label_distribution,
    load_dataset,
    random_weighted_guess,
    save_dataset,
    tier_for_category,
)
from .embeddings import EmbeddingStore, SynonymQueryParams, SynonymResult, cosine, load_vectors, synonyms
from .victim import (
    HttpTranslator,
    HttpVictimModel,
    KeywordVictim,
    QueryLedger,
    Translator,
    VictimModel,
    make_keyword_victim,
    with_cache,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingStore",
    "HttpTranslator",
    "HttpVictimModel",
    "KeywordVictim",
    "LabelDistribution",
    "LabeledDataset",
    "LanguageInfo",
    "QueryLedger",
    "Sample",
    "SynonymQueryParams",
    "SynonymResult",
    "Tier",
    "Translator",
    "VictimModel",
    "cosine",
    "empirical_label_distribution",
    "load_dataset",
    "load_vectors",
    "make_keyword_victim",
    "random_weighted_guess",
    "save_dataset",
    "synonyms",
    "tier_for_category",
    "with_cache",
]
