"""News/entity/topic graph pipeline for fake news detection."""

__version__ = "0.1.0"
