"""Prompt asset loading and slot filling.

Assets live under apicorpus/prompts/ as plain text. Slots are literal
{name} tokens. str.format is not usable here because the assets contain
JSON braces and multi-word slot names, so filling is done by replacing
the i-th occurrence of a slot with the i-th supplied value.
"""

from functools import lru_cache
from importlib import resources

from .errors import PromptRenderError

ASSET_NAMES = (
    "refinement",
    "generation",
    "backtranslation",
    "annotation",
    "fewshot_eval",
    "quality_eval",
)


@lru_cache(maxsize=None)
def load_asset(name: str) -> str:
    if name not in ASSET_NAMES:
        raise PromptRenderError(f"unknown prompt asset {name!r}")
    ref = resources.files("apicorpus").joinpath(f"prompts/{name}.txt")
    return ref.read_text(encoding="utf-8")


def fill(template: str, slots: dict) -> str:
    """Replace each {name} occurrence with the matching value.

    Values may be a single string (slot must occur exactly once) or a
    list of strings (one per occurrence, in order). Slots not named in
    `slots` are left untouched, so literal braces in asset text survive.
    """
    out = template
    for name, value in slots.items():
        token = "{" + name + "}"
        values = [value] if isinstance(value, str) else list(value)
        found = out.count(token)
        if found != len(values):
            raise PromptRenderError(
                f"slot {token} occurs {found} times, got {len(values)} values"
            )
        for v in values:
            out = out.replace(token, v, 1)
    return out


def render(name: str, slots: dict) -> str:
    return fill(load_asset(name), slots)
