from .image_io import load_image, save_image_lossless, dump_heatmap
from .runner import run, run_async, attack_image
