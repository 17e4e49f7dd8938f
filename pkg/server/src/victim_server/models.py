"""Model backends served over the wire protocol.

Fixture backends are deterministic, CPU-only, and load from small JSON files;
they exist so the protocol can be developed and conformance-tested without
GPUs or checkpoint downloads. The ``hf:`` backends wrap pretrained
checkpoints through the transformers stack and are imported lazily.
"""

from __future__ import annotations

import json
import re
import threading
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

_WORD_RE = re.compile(r"\w+", re.UNICODE)


class ModelError(Exception):
    """A backend could not be built or used."""


class UnsupportedLanguage(ModelError):
    """A translation request named a language the backend does not cover."""

    def __init__(self, code: str):
        super().__init__(f"unsupported language code: {code}")
        self.code = code


@dataclass
class PredictResult:
    rows: list[list[float]]
    truncated: list[bool]


class ClassifierBackend(Protocol):
    labels: list[str]

    def predict(self, texts: Sequence[str]) -> PredictResult: ...

    def info(self) -> dict: ...


class TranslatorBackend(Protocol):
    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]: ...

    def supports(self, code: str) -> bool: ...

    def info(self) -> dict: ...


class LinearBagClassifier:
    """Linear bag-of-words scorer with softmax output.

    JSON spec: ``labels`` (ordered names), ``weights`` (word -> one weight
    per label), optional ``bias``, ``lowercase`` and ``max_tokens``. Inputs
    past ``max_tokens`` are truncated and flagged in the response.
    """

    def __init__(self, spec: dict, source: str = "<inline>"):
        self.labels = [str(label) for label in spec["labels"]]
        if len(self.labels) < 2:
            raise ModelError(f"{source}: need at least two labels")
        k = len(self.labels)
        self._lowercase = bool(spec.get("lowercase", True))
        self._max_tokens = int(spec.get("max_tokens", 256))
        bias = spec.get("bias", [0.0] * k)
        if len(bias) != k:
            raise ModelError(f"{source}: bias width {len(bias)} != {k} labels")
        self._bias = np.asarray(bias, dtype=np.float64)
        self._weights: dict[str, np.ndarray] = {}
        for word, row in spec.get("weights", {}).items():
            if len(row) != k:
                raise ModelError(f"{source}: weight width for {word!r} != {k} labels")
            self._weights[self._normalize(word)] = np.asarray(row, dtype=np.float64)
        self._source = source

    @classmethod
    def from_file(cls, path: str | Path) -> "LinearBagClassifier":
        path = Path(path)
        if not path.exists():
            raise ModelError(f"fixture classifier not found: {path}")
        return cls(json.loads(path.read_text(encoding="utf-8")), source=str(path))

    def _normalize(self, token: str) -> str:
        token = unicodedata.normalize("NFC", token)
        return token.lower() if self._lowercase else token

    def predict(self, texts: Sequence[str]) -> PredictResult:
        rows: list[list[float]] = []
        truncated: list[bool] = []
        for text in texts:
            tokens = [self._normalize(t) for t in _WORD_RE.findall(text)]
            truncated.append(len(tokens) > self._max_tokens)
            tokens = tokens[: self._max_tokens]
            logits = self._bias.copy()
            for token in tokens:
                weight = self._weights.get(token)
                if weight is not None:
                    logits = logits + weight
            shifted = np.exp(logits - logits.max())
            rows.append((shifted / shifted.sum()).tolist())
        return PredictResult(rows=rows, truncated=truncated)

    def info(self) -> dict:
        return {
            "kind": "fixture-linear-bag",
            "source": self._source,
            "max_tokens": self._max_tokens,
            "lowercase": self._lowercase,
        }


class DictionaryTranslator:
    """Word-map translator over a fixed language set.

    JSON spec: ``languages`` (supported codes) and ``tables`` mapping
    ``"src>tgt"`` to word dictionaries. Words missing from a table pass
    through unchanged; a missing table means identity for that direction.
    Tokenization is whitespace-level, which is all a fixture needs.
    """

    def __init__(self, spec: dict, source: str = "<inline>"):
        self._languages = {str(code) for code in spec.get("languages", [])}
        if not self._languages:
            raise ModelError(f"{source}: translator spec lists no languages")
        self._tables: dict[str, dict[str, str]] = {
            direction: {str(k): str(v) for k, v in table.items()}
            for direction, table in spec.get("tables", {}).items()
        }
        self._source = source

    @classmethod
    def from_file(cls, path: str | Path) -> "DictionaryTranslator":
        path = Path(path)
        if not path.exists():
            raise ModelError(f"fixture translator not found: {path}")
        return cls(json.loads(path.read_text(encoding="utf-8")), source=str(path))

    def supports(self, code: str) -> bool:
        return code in self._languages

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        for code in (src, tgt):
            if not self.supports(code):
                raise UnsupportedLanguage(code)
        table = self._tables.get(f"{src}>{tgt}", {})
        out = []
        for text in texts:
            out.append(" ".join(table.get(token, token) for token in text.split()))
        return out

    def info(self) -> dict:
        return {
            "kind": "fixture-dictionary",
            "source": self._source,
            "languages": sorted(self._languages),
            "decoding": {"strategy": "dictionary-lookup"},
        }


class HfClassifier:
    """Sequence-classification checkpoint served deterministically.

    Inference runs in eval mode under no_grad, serialized by a lock so
    batched and concurrent callers see stable outputs.
    """

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - needs the models extra
            raise ModelError(
                "hf classifiers need the 'models' extra (torch + transformers)"
            ) from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModelForSequenceClassification.from_pretrained(model_id)
        self._model.to(device).eval()
        self._device = device
        self._model_id = model_id
        self._lock = threading.Lock()
        id2label = getattr(self._model.config, "id2label", None) or {}
        self.labels = [str(id2label.get(i, f"label{i}")) for i in range(self._model.config.num_labels)]

    def predict(self, texts: Sequence[str]) -> PredictResult:  # pragma: no cover
        torch = self._torch
        max_len = self._tokenizer.model_max_length
        truncated = [len(self._tokenizer.encode(t)) > max_len for t in texts]
        with self._lock, torch.no_grad():
            encoded = self._tokenizer(
                list(texts), return_tensors="pt", padding=True, truncation=True
            ).to(self._device)
            probs = torch.softmax(self._model(**encoded).logits, dim=-1)
        return PredictResult(rows=probs.cpu().double().tolist(), truncated=truncated)

    def info(self) -> dict:  # pragma: no cover
        return {"kind": "hf-sequence-classification", "model": self._model_id}


class HfTranslator:
    """Many-to-many translation checkpoint with greedy decoding by default.

    Language codes on the wire are the checkpoint's own codes (e.g.
    ``zul_Latn``); decoding parameters are reported through /health so runs
    stay attributable.
    """

    def __init__(self, model_id: str, device: str = "cpu", num_beams: int = 1, max_new_tokens: int = 256):
        try:
            import torch
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - needs the models extra
            raise ModelError(
                "hf translators need the 'models' extra (torch + transformers)"
            ) from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(model_id)
        self._model.to(device).eval()
        self._device = device
        self._model_id = model_id
        self._num_beams = num_beams
        self._max_new_tokens = max_new_tokens
        self._lock = threading.Lock()

    def supports(self, code: str) -> bool:  # pragma: no cover
        vocab = getattr(self._tokenizer, "lang_code_to_id", None)
        if vocab is not None:
            return code in vocab
        return self._tokenizer.convert_tokens_to_ids(code) != self._tokenizer.unk_token_id

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:  # pragma: no cover
        torch = self._torch
        for code in (src, tgt):
            if not self.supports(code):
                raise UnsupportedLanguage(code)
        with self._lock, torch.no_grad():
            self._tokenizer.src_lang = src
            encoded = self._tokenizer(
                list(texts), return_tensors="pt", padding=True, truncation=True
            ).to(self._device)
            generated = self._model.generate(
                **encoded,
                forced_bos_token_id=self._tokenizer.convert_tokens_to_ids(tgt),
                num_beams=self._num_beams,
                do_sample=False,
                max_new_tokens=self._max_new_tokens,
            )
        return self._tokenizer.batch_decode(generated, skip_special_tokens=True)

    def info(self) -> dict:  # pragma: no cover
        return {
            "kind": "hf-seq2seq",
            "model": self._model_id,
            "decoding": {
                "strategy": "greedy" if self._num_beams == 1 else "beam",
                "num_beams": self._num_beams,
                "do_sample": False,
                "max_new_tokens": self._max_new_tokens,
            },
        }


def build_classifier(identifier: str, device: str = "cpu") -> ClassifierBackend:
    if identifier.startswith("fixture:"):
        return LinearBagClassifier.from_file(identifier.split(":", 1)[1])
    if identifier.startswith("hf:"):
        return HfClassifier(identifier.split(":", 1)[1], device=device)
    raise ModelError(f"unknown classifier identifier scheme: {identifier!r}")


def build_translator(identifier: str, device: str = "cpu") -> TranslatorBackend:
    if identifier.startswith("fixture:"):
        return DictionaryTranslator.from_file(identifier.split(":", 1)[1])
    if identifier.startswith("hf:"):
        return HfTranslator(identifier.split(":", 1)[1], device=device)
    raise ModelError(f"unknown translator identifier scheme: {identifier!r}")
