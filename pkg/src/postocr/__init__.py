"""OCR post-correction toolkit."""
