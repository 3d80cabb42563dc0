from .gradcam import (
    Heatmap,
    box_heatmap,
    layer_heatmap,
    upsample_heatmap,
    combined_heatmap,
    fuse_heatmaps,
    occlusion_sensitivity,
)
from .smoothing import gaussian_kernel, smooth_heatmap
from .placement import select_patches_from_heatmap, heatmap_mask
