"""Prompt rendering, completion transport with record/replay, and reply parsing."""

from .client import (
    API_KEY_ENV,
    DEFAULT_ENDPOINT,
    MAX_TOKENS,
    TEMPERATURE,
    Completion,
    CompletionRequest,
    LLMClient,
    LLMError,
    ReplayMissError,
    ResponseCache,
    cache_key,
)
from .extract import ExtractionError, ExtractionResult, extract_actions, extract_choice, extract_define
from .prompts import PromptError, PromptTemplate, format_choices, load_template, render_prompt

__all__ = [
    "API_KEY_ENV",
    "DEFAULT_ENDPOINT",
    "MAX_TOKENS",
    "TEMPERATURE",
    "Completion",
    "CompletionRequest",
    "ExtractionError",
    "ExtractionResult",
    "LLMClient",
    "LLMError",
    "PromptError",
    "PromptTemplate",
    "ReplayMissError",
    "ResponseCache",
    "cache_key",
    "extract_actions",
    "extract_choice",
    "extract_define",
    "format_choices",
    "load_template",
    "render_prompt",
]
