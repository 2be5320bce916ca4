"""Domain types (array-bearing dataclasses and CSV row TypedDicts)."""
