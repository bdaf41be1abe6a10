"""Procedural sprite dataset, curation filters and RGBA frame I/O."""
