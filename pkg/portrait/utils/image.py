import numpy as np
import torch
from PIL import Image

from portrait.utils.errors import DimensionError


def tensor_to_pil(image: torch.Tensor) -> Image.Image:
    """
    Convert a [3, H, W] (or [1, 3, H, W]) image with values in [0, 1] to an 8-bit RGB PIL image.

    Args:
        image (torch.Tensor): The image tensor.

    Returns:
        Image.Image: RGB image, pixel = round(255 * value).
    """
    if image.dim() == 4 and image.size(0) == 1:
        image = image[0]
    if image.dim() != 3 or image.size(0) != 3:
        raise DimensionError(f'expected an image of shape [3, H, W], got {tuple(image.shape)}')
    array = image.detach().cpu().double().clamp(0.0, 1.0).permute(1, 2, 0).numpy()
    return Image.fromarray(np.round(array * 255.0).astype(np.uint8))


def pil_to_tensor(pil_img: Image.Image) -> torch.Tensor:
    """
    Convert a PIL image to a [3, H, W] float tensor in [0, 1].
    """
    array = np.asarray(pil_img.convert('RGB'), dtype=np.float64) / 255.0
    return torch.from_numpy(array).permute(2, 0, 1).to(torch.get_default_dtype()).contiguous()


def save_png(image: torch.Tensor, path: str) -> None:
    """
    Write an image tensor as an 8-bit RGB PNG.

    Args:
        image (torch.Tensor): [3, H, W] image with values in [0, 1].
        path (str): Output path.
    """
    tensor_to_pil(image).save(path, format='PNG')


def load_png(path: str) -> torch.Tensor:
    with Image.open(path) as pil_img:
        return pil_to_tensor(pil_img)
