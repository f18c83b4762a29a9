"""City-level measurement of race/ethnicity/national-origin discrimination in
geotagged short-text corpora.

The package covers the full path from raw record streams to fitted count
models: corpus ingestion and city assignment, keyword-lexicon filtering,
a hashed bag-of-n-grams classifier with active learning, a self-hosted
annotation service, targeted/self-narration delineation, category-lexicon
scoring, bot flagging, per-city aggregation, and negative binomial
regression with stepwise AIC selection.
"""

__version__ = "0.1.0"
