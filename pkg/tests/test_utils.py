import pytest
import torch

from portrait.utils.errors import DimensionError, InputError
from portrait.utils.format import format_checked
from portrait.utils.image import load_png, save_png, tensor_to_pil
from portrait.utils.seed import set_seed


@format_checked
def count_items(items: list, name: str) -> int:
    return len(items)


def test_format_checked_rejects_empty_arguments():
    assert count_items([1, 2], 'x') == 2
    with pytest.raises(InputError, match='items'):
        count_items([], 'x')
    with pytest.raises(InputError, match='name'):
        count_items([1], name='')


def test_png_round_trip(tmp_path):
    image = torch.rand(3, 16, 24)
    path = str(tmp_path / 'face.png')
    save_png(image, path)
    loaded = load_png(path)
    assert loaded.shape == (3, 16, 24)
    assert (loaded - image).abs().max() <= 0.5 / 255 + 1e-6


def test_pixel_rounding():
    image = torch.tensor([0.0, 0.5, 1.0, 1.5]).reshape(1, 1, 4).expand(3, 1, 4)
    pixels = list(tensor_to_pil(image).getdata())
    assert [p[0] for p in pixels] == [0, 128, 255, 255]
    with pytest.raises(DimensionError):
        tensor_to_pil(torch.zeros(1, 4, 4))


def test_set_seed():
    set_seed(11)
    first = torch.rand(4)
    set_seed(11)
    assert torch.equal(first, torch.rand(4))
