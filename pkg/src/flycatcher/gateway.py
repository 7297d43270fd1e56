"""Provider-agnostic chat interface with transcripts and token accounting.

Two providers: an HTTP chat-completion endpoint (configured via the
FC_PROVIDER_URL / FC_API_KEY environment variables) and a scripted provider
that replays a JSON array of canned replies, which makes whole pipeline
runs bit-deterministic. Every conversation persists as JSON Lines, one
exchange per line, and token counters accumulate per conversation.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from flycatcher.subject import estimate_tokens


class ProviderError(Exception):
    """Provider-side failure; aborts the current checker attempt only."""


@dataclass
class PromptExchange:
    role: str  # system | user | assistant
    content: str
    input_tokens: int = 0
    output_tokens: int = 0
    wall_time_ms: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ProviderConfig:
    kind: str  # "http" | "scripted"
    endpoint: str = ""
    model_name: str = ""
    max_completions: int = 1
    script_path: str = ""

    def __post_init__(self):
        if self.kind not in ("http", "scripted"):
            raise ValueError(f"unknown provider kind: {self.kind!r}")
        if self.max_completions != 1:
            raise ValueError("max_completions is fixed to 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ProviderConfig":
        return cls(
            kind=data.get("kind", "scripted"),
            endpoint=data.get("endpoint", ""),
            model_name=data.get("model_name", ""),
            max_completions=int(data.get("max_completions", 1)),
            script_path=data.get("script_path", ""),
        )


class ScriptedProvider:
    """Replays canned assistant replies in order; deterministic and offline."""

    deterministic = True

    def __init__(self, replies: list[str], name: str = "scripted"):
        self._replies = list(replies)
        self._next = 0
        self.name = name

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedProvider":
        replies = json.loads(Path(path).read_text())
        if not isinstance(replies, list) or not all(isinstance(r, str) for r in replies):
            raise ProviderError(f"script must be a JSON array of strings: {path}")
        return cls(replies, name=f"scripted:{Path(path).name}")

    def complete(self, messages: list[dict]) -> tuple[str, int, int, int]:
        if self._next >= len(self._replies):
            raise ProviderError("script exhausted")
        reply = self._replies[self._next]
        self._next += 1
        prompt_tokens = sum(estimate_tokens(m["content"]) for m in messages)
        # wall time pinned to zero so scripted artifacts are byte-identical
        return reply, prompt_tokens, estimate_tokens(reply), 0


class HttpProvider:
    """JSON chat-completion endpoint; request/response in the common shape."""

    deterministic = False

    def __init__(self, config: ProviderConfig):
        self.endpoint = config.endpoint or os.environ.get("FC_PROVIDER_URL", "")
        if not self.endpoint:
            raise ProviderError("http provider needs an endpoint (FC_PROVIDER_URL)")
        self.model_name = config.model_name
        self.api_key = os.environ.get("FC_API_KEY", "")
        self.name = f"http:{self.model_name or self.endpoint}"

    def complete(self, messages: list[dict]) -> tuple[str, int, int, int]:
        import requests

        payload = {"model": self.model_name, "messages": messages, "n": 1}
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        start = time.monotonic()
        try:
            response = requests.post(self.endpoint, json=payload, headers=headers, timeout=300)
            response.raise_for_status()
            data = response.json()
        except Exception as err:  # network, auth, or malformed payload
            raise ProviderError(f"provider request failed: {err}") from err
        wall_ms = int((time.monotonic() - start) * 1000)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as err:
            raise ProviderError(f"malformed provider response: {err}") from err
        usage = data.get("usage", {})
        prompt_tokens = int(usage.get("prompt_tokens", 0)) or sum(
            estimate_tokens(m["content"]) for m in messages
        )
        completion_tokens = int(usage.get("completion_tokens", 0)) or estimate_tokens(content)
        return content, prompt_tokens, completion_tokens, wall_ms


def make_provider(config: ProviderConfig, base_dir: Path | None = None):
    if config.kind == "scripted":
        script = Path(config.script_path)
        if base_dir is not None and not script.is_absolute():
            script = base_dir / script
        return ScriptedProvider.from_file(script)
    return HttpProvider(config)


@dataclass
class Conversation:
    """Append-only exchange list; grows by exactly two per send."""

    transcript_path: Path | None = None
    exchanges: list[PromptExchange] = field(default_factory=list)
    total_input_tokens: int = 0
    total_output_tokens: int = 0
    total_wall_ms: int = 0

    def send(self, content: str, provider) -> PromptExchange:
        """Send the conversation plus one user message; append both sides."""
        user = PromptExchange(role="user", content=content)
        messages = [{"role": e.role, "content": e.content} for e in self.exchanges]
        messages.append({"role": "user", "content": content})
        reply, input_tokens, output_tokens, wall_ms = provider.complete(messages)
        user.input_tokens = input_tokens
        assistant = PromptExchange(
            role="assistant",
            content=reply,
            output_tokens=output_tokens,
            wall_time_ms=wall_ms,
        )
        self._append(user)
        self._append(assistant)
        self.total_input_tokens += input_tokens
        self.total_output_tokens += output_tokens
        self.total_wall_ms += wall_ms
        return assistant

    def _append(self, exchange: PromptExchange) -> None:
        self.exchanges.append(exchange)
        if self.transcript_path is not None:
            self.transcript_path.parent.mkdir(parents=True, exist_ok=True)
            with self.transcript_path.open("a") as fh:
                fh.write(json.dumps(exchange.to_dict(), sort_keys=True) + "\n")

    @property
    def total_tokens(self) -> int:
        return self.total_input_tokens + self.total_output_tokens
