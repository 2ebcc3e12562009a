"""Model backends behind the wire protocol.

`StubBackend` is deterministic arithmetic (identical to the attack side's
built-in stub, which keeps the golden fixtures byte-stable on both sides).
`TransformersBackend` loads a real fine-tuned classifier and masked-LM from
disk for full-scale runs.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Protocol


class Backend(Protocol):
    def score_texts(self, texts: list[str]) -> list[list[float]]: ...

    def fill_mask(self, text: str, char_start: int, char_end: int, k: int,
                  keep_original: bool) -> list[tuple[str, float]]: ...


class StubBackend:
    """Deterministic stand-in; no model weights required."""

    def score_texts(self, texts):
        out = []
        for text in texts:
            even = sum(1 for ch in text if ord(ch) % 2 == 0)
            odd = len(text) - even
            z0, z1 = 0.3 * even, 0.3 * odd
            m = max(z0, z1)
            e0, e1 = math.exp(z0 - m), math.exp(z1 - m)
            s = e0 + e1
            out.append([e0 / s, e1 / s])
        return out

    def fill_mask(self, text, char_start, char_end, k, keep_original):
        original = text[char_start:char_end]
        context = text[:char_start] + text[char_end:]
        counts = Counter(ch for ch in context if ch != original)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(ch, float(c)) for ch, c in ranked[:k]]


class TransformersBackend:
    """Loads `classifier/` and `mlm/` checkpoint directories under model_path."""

    def __init__(self, model_path: str, device: str = "cpu"):
        import torch
        from transformers import (
            AutoModelForMaskedLM,
            AutoModelForSequenceClassification,
            AutoTokenizer,
        )

        self._torch = torch
        self.device = device
        self.cls_tokenizer = AutoTokenizer.from_pretrained(f"{model_path}/classifier")
        self.cls_model = AutoModelForSequenceClassification.from_pretrained(
            f"{model_path}/classifier"
        ).to(device).eval()
        self.mlm_tokenizer = AutoTokenizer.from_pretrained(f"{model_path}/mlm")
        self.mlm_model = AutoModelForMaskedLM.from_pretrained(
            f"{model_path}/mlm"
        ).to(device).eval()

    def score_texts(self, texts):
        torch = self._torch
        with torch.no_grad():
            enc = self.cls_tokenizer(
                texts, return_tensors="pt", padding=True, truncation=True
            ).to(self.device)
            probs = torch.softmax(self.cls_model(**enc).logits, dim=-1)
        return probs.cpu().tolist()

    def fill_mask(self, text, char_start, char_end, k, keep_original):
        torch = self._torch
        original = text[char_start:char_end]
        if keep_original:
            # Predict at the span's token position on the unmasked text so
            # the original surface conditions the candidates.
            model_input = text
        else:
            model_input = text[:char_start] + self.mlm_tokenizer.mask_token + text[char_end:]
        enc = self.mlm_tokenizer(
            model_input, return_tensors="pt", return_offsets_mapping=True, truncation=True
        )
        offsets = enc.pop("offset_mapping")[0].tolist()
        target = next(
            (
                i
                for i, (a, b) in enumerate(offsets)
                if a < (char_end if keep_original else char_start + 1) and b > char_start
            ),
            None,
        )
        if target is None:
            return []
        with torch.no_grad():
            logits = self.mlm_model(**{k_: v.to(self.device) for k_, v in enc.items()}).logits
            probs = torch.softmax(logits[0, target], dim=-1)
        # Over-fetch so filtering the original still leaves k candidates.
        top = torch.topk(probs, min(k + 8, probs.numel()))
        out = []
        for score, idx in zip(top.values.tolist(), top.indices.tolist()):
            piece = self.mlm_tokenizer.decode([idx]).strip()
            if not piece or piece == original or piece.startswith("["):
                continue
            out.append((piece, float(score)))
            if len(out) >= k:
                break
        return out
