"""Corpus persistence, tuning templates, and the level 1/2/3 split."""

import json
import os
import random
from collections import Counter
from dataclasses import dataclass, field

from . import prompts
from .errors import CorpusTooSmall, InsufficientShots, SchemaViolation
from .instruct_pipeline import InstructionCandidate
from .oas_ingest import RECORD_FIELDS, EndpointRecord

# persisted field order; the first eight are the endpoint record
INSTANCE_FIELDS = RECORD_FIELDS + (
    "api_call", "lang", "instruction_candidates",
    "instruction", "instruction_test", "hub",
)

STRICT_WINDOW = 20_000
STRICT_L3_START = 80_000
LEVEL_CAP = 1_000


@dataclass
class DatasetInstance:
    record: EndpointRecord
    api_call: str
    lang: str
    instruction_candidates: list = field(default_factory=list)
    instruction: str = ""
    instruction_test: str = "None"
    hub: str = "other"

    @property
    def api_name(self) -> str:
        return self.record.api_name

    def to_dict(self) -> dict:
        d = self.record.to_dict()
        d["api_call"] = self.api_call
        d["lang"] = self.lang
        d["instruction_candidates"] = [c.to_dict() for c in self.instruction_candidates]
        d["instruction"] = self.instruction
        d["instruction_test"] = self.instruction_test
        d["hub"] = self.hub
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetInstance":
        return cls(
            record=EndpointRecord(**{f: d[f] for f in RECORD_FIELDS}),
            api_call=d["api_call"],
            lang=d["lang"],
            instruction_candidates=[
                InstructionCandidate.from_dict(c)
                for c in d.get("instruction_candidates", [])
            ],
            instruction=d.get("instruction", ""),
            instruction_test=d.get("instruction_test", "None"),
            hub=d.get("hub", "other"),
        )


_REQUIRED_STR = RECORD_FIELDS + ("api_call", "lang", "instruction",
                                 "instruction_test", "hub")


def _check_line_schema(d: dict, line: int):
    if not isinstance(d, dict):
        raise SchemaViolation(line, "not an object")
    for name in INSTANCE_FIELDS:
        if name not in d:
            raise SchemaViolation(line, f"missing field {name!r}")
    for name in _REQUIRED_STR:
        if not isinstance(d[name], str):
            raise SchemaViolation(line, f"field {name!r} is not a string")
    if not isinstance(d["instruction_candidates"], list):
        raise SchemaViolation(line, "instruction_candidates is not a list")
    for c in d["instruction_candidates"]:
        if not isinstance(c, dict) or "idx" not in c or "candidate" not in c:
            raise SchemaViolation(line, "malformed instruction candidate")


def dumps_instance(instance: DatasetInstance) -> str:
    return json.dumps(instance.to_dict(), ensure_ascii=False,
                      separators=(",", ":"))


def write_corpus(instances: list, path):
    """Atomic line-delimited write: temp file in place, then rename."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(dumps_instance(instance) + "\n")
    os.replace(tmp, path)


def read_corpus(path) -> list:
    out = []
    with open(os.fspath(path), encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(line_no, f"bad JSON: {exc}")
            _check_line_schema(d, line_no)
            out.append(DatasetInstance.from_dict(d))
    return out


@dataclass
class SplitResult:
    train: list
    level1: list
    level2: list
    level3: list
    window: int = 0
    l3_start: int = 0

    def counts(self) -> dict:
        return {
            "train": len(self.train),
            "level1": len(self.level1),
            "level2": len(self.level2),
            "level3": len(self.level3),
        }


def split_levels(corpus: list, mode: str = "strict", cap: int = LEVEL_CAP,
                 want_level3: bool = True) -> SplitResult:
    """Partition an ordered corpus into train plus three test levels.

    Level 1 takes early points whose API is frequent and keeps those
    APIs in train (seen APIs, seen endpoints). Level 2 takes one early
    point per fresh API and removes those APIs from train. Level 3 takes
    late points of APIs untouched by levels 1 and 2 and removes those
    APIs too. Strict mode uses the fixed window constants; scaled mode
    shrinks them proportionally to corpus size.
    """
    n = len(corpus)
    if mode == "strict":
        window, l3_start = STRICT_WINDOW, STRICT_L3_START
        if want_level3 and n < STRICT_L3_START + 1:
            raise CorpusTooSmall(
                f"{n} entries; strict level 3 needs more than {STRICT_L3_START}")
    elif mode == "scaled":
        window, l3_start = n // 6, (2 * n) // 3
    else:
        raise ValueError(f"unknown split mode {mode!r}")

    freq = Counter(inst.api_name for inst in corpus)

    level1 = []
    level1_apis = set()
    for inst in corpus[:window]:
        if len(level1) == cap:
            break
        if inst.instruction_test != "None" and freq[inst.api_name] > 4:
            level1.append(inst)
            level1_apis.add(inst.api_name)

    level2 = []
    level2_apis = set()
    for inst in corpus[:window]:
        if len(level2_apis) == cap:
            break
        if inst.api_name in level1_apis or inst.api_name in level2_apis:
            continue
        level2.append(inst)
        level2_apis.add(inst.api_name)

    level3 = []
    level3_apis = set()
    if want_level3:
        for inst in corpus[l3_start:]:
            if len(level3) == cap:
                break
            if inst.api_name in level1_apis or inst.api_name in level2_apis:
                continue
            level3.append(inst)
            level3_apis.add(inst.api_name)

    removed = level2_apis | level3_apis
    train = [inst for inst in corpus if inst.api_name not in removed]
    return SplitResult(train=train, level1=level1, level2=level2, level3=level3,
                       window=window, l3_start=l3_start)


def _fewshot_slots(instance: DatasetInstance, shots: list, task_instruction: str):
    return {
        "api_description": instance.record.api_description,
        "programming language": instance.lang,
        "instruction": [s.instruction for s in shots],
        "api_call": [s.api_call for s in shots],
        "instruction_test": task_instruction,
    }


def _zero_shot_template() -> str:
    text = prompts.load_asset("fewshot_eval")
    head = text[:text.index("Given the following examples:")]
    tail = text[text.index("Your actual task:"):]
    return head + tail


def to_tuning_template(instance: DatasetInstance, mode: str,
                       shots: list = None, pool: list = None,
                       seed: int = 0):
    """(prompt, completion) pair for fine-tuning.

    three_shot needs 3 same-API shots; pass them directly or give a pool
    to sample from with a seeded RNG. The completion is the API call.
    """
    task = instance.instruction if instance.instruction else instance.instruction_test
    if mode == "zero_shot":
        prompt = prompts.fill(_zero_shot_template(), {
            "api_description": instance.record.api_description,
            "programming language": instance.lang,
            "instruction_test": task,
        })
        return prompt, instance.api_call
    if mode != "three_shot":
        raise ValueError(f"unknown template mode {mode!r}")

    if shots is None:
        if pool is None:
            raise InsufficientShots("three_shot needs shots or a pool")
        same_api = [p for p in pool
                    if p.api_name == instance.api_name and p is not instance]
        if len(same_api) < 3:
            raise InsufficientShots(
                f"{instance.api_name} has {len(same_api)} other instances")
        shots = random.Random(seed).sample(same_api, 3)
    if len(shots) != 3:
        raise InsufficientShots(f"got {len(shots)} shots, need 3")
    for shot in shots:
        if shot.api_name != instance.api_name:
            raise InsufficientShots(
                f"shot from {shot.api_name!r}, need {instance.api_name!r}")
    prompt = prompts.render("fewshot_eval",
                            _fewshot_slots(instance, shots, task))
    return prompt, instance.api_call
