from .ground import GroundConfig, ground_fit
from .model import (
    PlaceabilityModel,
    TrainConfig,
    bce_loss,
    fourier_encode,
    infer_mask,
    load_model,
    loss_and_grad,
    mlp_forward,
    mlp_forward_batch,
    save_model,
    train,
)

__all__ = [
    "GroundConfig", "ground_fit", "PlaceabilityModel", "TrainConfig", "bce_loss",
    "fourier_encode", "infer_mask", "load_model", "loss_and_grad", "mlp_forward",
    "mlp_forward_batch", "save_model", "train",
]
