"""Toolkit for pharmaceutical manufacturing deviation investigations:
structured extraction from incident reports, a graded evaluation harness,
and embedding-based retrieval feeding a RAG pipeline."""

__version__ = "0.1.0"
