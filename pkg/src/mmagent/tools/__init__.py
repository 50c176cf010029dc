"""Natively implemented tools: temporal reasoning, text grounding, counting,
and the prompt-template tools that run over an LLM backend."""
