"""Prompting, model access, overgeneration trimming and test doubles."""
