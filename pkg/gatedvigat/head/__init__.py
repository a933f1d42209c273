from gatedvigat.head.gat import GatBlockParams, gat_block
from gatedvigat.head.head import (
    FrameLocalSummary,
    GlobalSummary,
    HeadParams,
    classify,
    global_path,
    local_frame,
    local_video,
)

__all__ = [
    "FrameLocalSummary",
    "GatBlockParams",
    "GlobalSummary",
    "HeadParams",
    "classify",
    "gat_block",
    "global_path",
    "local_frame",
    "local_video",
]
