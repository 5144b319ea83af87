"""Adapter to a pixel-space text-conditioned diffusion model (DeepFloyd IF stage I).

Needs the optional ``diffusers`` and ``transformers`` packages and model weights;
the rest of the package never imports this module eagerly.
"""

from __future__ import annotations

import numpy as np
import torch

from ..errors import BackendFailure
from .base import ConditioningEmbedding, GuidanceBackend
from .classifier import checkpoint_root


class DiffusionBackend(GuidanceBackend):
    """``D(x; sigma, c)`` from an epsilon-predicting DDPM UNet.

    Rasters are ink-is-1 in [0, 1]; the model sees RGB in [-1, 1] with black ink
    on white, i.e. ``img = 1 - 2x``, so a perturbation ``sigma`` in raster units
    is ``2 sigma`` in image units.  The timestep whose noise level is closest
    is used, and the x0 prediction is mapped back to raster units.
    """

    backend_id = "deepfloyd-if"

    def __init__(
        self,
        model_id: str = "DeepFloyd/IF-I-XL-v1.0",
        guidance_scale: float = 1.0,
        timestep_range=(0.3, 0.7),
        device: str | None = None,
        local_files_only: bool = False,
        pipeline=None,
    ):
        self.model_id = model_id
        self.guidance_scale = float(guidance_scale)
        self.device = device or ("cuda" if torch.cuda.is_available() else "cpu")
        if pipeline is None:
            try:
                from diffusers import IFPipeline
            except ImportError as exc:
                raise BackendFailure(
                    "the diffusion backend needs the optional 'diffusers' package"
                ) from exc
            try:
                pipeline = IFPipeline.from_pretrained(
                    model_id,
                    cache_dir=str(checkpoint_root()),
                    local_files_only=local_files_only,
                    torch_dtype=torch.float16 if self.device == "cuda" else torch.float32,
                ).to(self.device)
            except Exception as exc:
                raise BackendFailure(f"cannot load diffusion model {model_id!r}: {exc}") from exc
        self.pipe = pipeline
        self.unet = pipeline.unet
        self.resolution = int(self.unet.config.sample_size)
        acp = pipeline.scheduler.alphas_cumprod.double().cpu()
        self._alphas = acp
        self._sigmas = torch.sqrt((1 - acp) / acp)
        n = len(acp)
        lo, hi = timestep_range
        # noise levels are in raster units: half of the image-space level
        self.sigma_range = (
            float(self._sigmas[int(lo * (n - 1))]) / 2,
            float(self._sigmas[int(hi * (n - 1))]) / 2,
        )

    def embed(self, prompt: str) -> ConditioningEmbedding:
        with torch.no_grad():
            cond, uncond = self.pipe.encode_prompt(
                prompt, do_classifier_free_guidance=True, num_images_per_prompt=1, device=self.device
            )
        return ConditioningEmbedding(self.backend_id, prompt, (cond, uncond))

    def _timestep(self, sigma_img: float) -> int:
        return int(torch.argmin((self._sigmas - sigma_img).abs()))

    @torch.no_grad()
    def denoise(self, x, sigma, c):
        self.check_embedding(c)
        cond, uncond = c.payload
        b = x.shape[0]
        img = (1.0 - 2.0 * x)[:, None].expand(b, 3, *x.shape[-2:]).to(self.device, self.unet.dtype)
        t = self._timestep(2.0 * float(sigma))
        a = float(self._alphas[t])
        xt = np.sqrt(a) * img
        ts = torch.full((b,), t, device=self.device, dtype=torch.long)
        if self.guidance_scale == 1.0:
            eps = self.unet(xt, ts, encoder_hidden_states=cond.expand(b, *cond.shape[1:])).sample[:, :3]
        else:
            emb = torch.cat([uncond.expand(b, *uncond.shape[1:]), cond.expand(b, *cond.shape[1:])])
            out = self.unet(torch.cat([xt, xt]), torch.cat([ts, ts]), encoder_hidden_states=emb).sample[:, :3]
            eu, ec = out.chunk(2)
            eps = eu + self.guidance_scale * (ec - eu)
        x0 = (xt - np.sqrt(1 - a) * eps) / np.sqrt(a)
        return ((1.0 - x0.float().mean(1)) / 2.0).to(x.device, x.dtype)

    def describe(self):
        return {**super().describe(), "model_id": self.model_id, "guidance_scale": self.guidance_scale}
