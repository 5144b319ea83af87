"""OCR adapters: map a word raster to a predicted string."""

from __future__ import annotations

import hashlib

import numpy as np
import torch

from ..errors import OcrFailure
from ..raster import RasterImage


def image_digest(img: RasterImage) -> str:
    """Hash of the 8-bit rendering; stable across platforms for identical pixels."""
    arr = np.asarray(img.to_pil(), dtype=np.uint8)
    return hashlib.sha256(arr.tobytes() + str(arr.shape).encode()).hexdigest()


def split_cells(img: RasterImage) -> torch.Tensor:
    """Cut an N*H x H word raster into N square cells."""
    h, w = img.height, img.width
    n = max(1, int(round(w / h)))
    if n * h != w:
        raise OcrFailure(f"word raster {h}x{w} is not a whole number of square cells")
    return img.data.reshape(h, n, h).permute(1, 0, 2)


class OcrAdapter:
    ocr_id = "abstract"

    def recognize(self, img: RasterImage) -> str:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"ocr_id": self.ocr_id}


class StubOcr(OcrAdapter):
    """Deterministic stand-in: looks predictions up by image digest (or calls a function)."""

    ocr_id = "stub"

    def __init__(self, responses=None, default: str = ""):
        self.responses = responses if callable(responses) else dict(responses or {})
        self.default = default

    def recognize(self, img):
        if callable(self.responses):
            return self.responses(img)
        return self.responses.get(image_digest(img), self.default)


class TemplateOcr(OcrAdapter):
    """Per-cell nearest-template reader built from font renderings of A-Z and a-z.

    Cells and templates are cropped to their ink box and rescaled to fill a
    fixed square (keeping the aspect ratio), then compared by normalized
    correlation.  Crude but deterministic and dependency-free.
    """

    ocr_id = "template"
    size = 32

    def __init__(self, fonts=("DejaVuSans.ttf",), resolution: int = 64):
        from ..guidance.classifier import render_font_letters

        self.fonts = tuple(fonts)
        self.resolution = resolution
        imgs, chars = render_font_letters(self.fonts, resolution)
        self.chars = [c.lower() for c in chars]
        self.templates = self._features(imgs)

    @classmethod
    def _normalize(cls, cell: torch.Tensor) -> torch.Tensor:
        ink = cell > 0.5
        if not ink.any():
            return torch.zeros(cls.size, cls.size)
        rows = torch.nonzero(ink.any(1)).flatten()
        cols = torch.nonzero(ink.any(0)).flatten()
        crop = cell[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1].float()
        h, w = crop.shape
        s = cls.size / max(h, w)
        nh, nw = max(1, round(h * s)), max(1, round(w * s))
        crop = torch.nn.functional.interpolate(crop[None, None], (nh, nw), mode="area")[0, 0]
        out = torch.zeros(cls.size, cls.size)
        y0, x0 = (cls.size - nh) // 2, (cls.size - nw) // 2
        out[y0 : y0 + nh, x0 : x0 + nw] = crop
        return out

    @classmethod
    def _features(cls, x: torch.Tensor) -> torch.Tensor:
        x = torch.stack([cls._normalize(c) for c in x]).reshape(len(x), -1)
        x = x - x.mean(1, keepdim=True)
        return x / (x.norm(dim=1, keepdim=True) + 1e-8)

    def recognize(self, img):
        sims = self._features(split_cells(img)) @ self.templates.T
        return "".join(self.chars[int(i)] for i in sims.argmax(1))

    def describe(self):
        return {"ocr_id": self.ocr_id, "fonts": list(self.fonts), "size": self.size}


class ClassifierOcr(OcrAdapter):
    """Per-cell argmax of a :class:`LetterClassifier`."""

    ocr_id = "classifier"

    def __init__(self, classifier=None):
        if classifier is None:
            from ..guidance.classifier import default_letter_classifier

            classifier = default_letter_classifier()
        self.classifier = classifier

    def recognize(self, img):
        cells = split_cells(img)
        return "".join(self.classifier.predict(cells)).lower()

    def describe(self):
        return {"ocr_id": self.ocr_id, "classifier": self.classifier.fingerprint()}


class TrOcrAdapter(OcrAdapter):
    """Transformer OCR through the optional ``transformers`` package (weights must be available)."""

    ocr_id = "trocr"

    def __init__(self, model_id: str = "microsoft/trocr-base-printed", local_files_only: bool = True):
        self.model_id = model_id
        self.local_files_only = local_files_only
        self._model = None

    def _load(self):
        if self._model is None:
            try:
                from transformers import TrOCRProcessor, VisionEncoderDecoderModel
            except ImportError as exc:
                raise OcrFailure("the trocr adapter needs the 'transformers' package") from exc
            try:
                self._proc = TrOCRProcessor.from_pretrained(self.model_id, local_files_only=self.local_files_only)
                self._model = VisionEncoderDecoderModel.from_pretrained(self.model_id, local_files_only=self.local_files_only).eval()
            except Exception as exc:
                raise OcrFailure(f"cannot load OCR model {self.model_id}: {exc}") from exc
        return self._proc, self._model

    def recognize(self, img):
        proc, model = self._load()
        pix = proc(images=img.to_pil().convert("RGB"), return_tensors="pt").pixel_values
        with torch.no_grad():
            ids = model.generate(pix, max_new_tokens=24)
        return proc.batch_decode(ids, skip_special_tokens=True)[0]

    def describe(self):
        return {"ocr_id": self.ocr_id, "model_id": self.model_id}


OCR_ADAPTERS = {"stub": StubOcr, "template": TemplateOcr, "classifier": ClassifierOcr, "trocr": TrOcrAdapter}


def make_ocr(name: str, **options) -> OcrAdapter:
    try:
        cls = OCR_ADAPTERS[name]
    except KeyError:
        raise ValueError(f"unknown OCR adapter {name!r}; available: {', '.join(sorted(OCR_ADAPTERS))}") from None
    return cls(**options)


def case_insensitive(text: str) -> str:
    return text.strip().lower()

