"""
File stores: model files, corpus manifests, output artifacts.
"""

from .crud_corpus import load_corpus, manifest_store, write_corpus
from .crud_model import load_model, model_store, save_model

__all__ = ["load_corpus", "load_model", "manifest_store", "model_store", "save_model", "write_corpus"]
