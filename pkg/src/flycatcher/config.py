"""Top-level configuration: one flycatcher.json per subject project.

Bundles the project config (its own standalone schema), the provider
config, budgets, and caps. Relative paths resolve against the config
file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from flycatcher.gateway import ProviderConfig
from flycatcher.subject import ProjectConfig, ProjectError


@dataclass
class FlycatcherConfig:
    base_dir: Path
    root: Path
    out_dir: Path
    project: ProjectConfig
    provider: ProviderConfig
    context_token_budget: int = 30_000
    max_attempts: int = 125
    same_kind_cutoff: int = 5
    validation_extra: int = 20
    dynamic_validation_cap_s: float = 1800.0
    overhead_noise_epsilon: float = 0.25
    on_violation: str = "raise"
    seed: int = 0
    pricing: dict = field(default_factory=lambda: {"input_per_1k": 0.0, "output_per_1k": 0.0})

    @property
    def work_dir(self) -> Path:
        return self.out_dir / "work"


def load_config(path: Path | str) -> FlycatcherConfig:
    path = Path(path)
    if not path.is_file():
        raise ProjectError(f"config file not found: {path}")
    data = json.loads(path.read_text())
    base = path.resolve().parent
    try:
        project = ProjectConfig.from_dict(data["project"])
        provider = ProviderConfig.from_dict(data.get("provider", {"kind": "scripted"}))
    except KeyError as missing:
        raise ProjectError(f"config is missing section {missing}") from None
    budgets = data.get("budgets", {})
    caps = data.get("caps", {})
    root = base / data.get("root", ".")
    out_dir = Path(data["out_dir"]) if "out_dir" in data else Path("fc_out")
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    return FlycatcherConfig(
        base_dir=base,
        root=root,
        out_dir=out_dir,
        project=project,
        provider=provider,
        context_token_budget=int(budgets.get("context_tokens", 30_000)),
        max_attempts=int(budgets.get("max_attempts", 125)),
        same_kind_cutoff=int(budgets.get("same_kind_cutoff", 5)),
        validation_extra=int(budgets.get("validation_extra", 20)),
        dynamic_validation_cap_s=float(caps.get("dynamic_validation_seconds", 1800)),
        overhead_noise_epsilon=float(caps.get("overhead_noise_epsilon", 0.25)),
        on_violation=data.get("on_violation", "raise"),
        seed=int(data.get("seed", 0)),
        pricing=dict(data.get("pricing", {"input_per_1k": 0.0, "output_per_1k": 0.0})),
    )
