"""Constants for evaluation."""

KEY_GREEN = (0.0, 1.0, 0.0)
BLACK = (0.0, 0.0, 0.0)

# Reported in place of +inf for identical images.
PSNR_CAP_DB = 99.0

MASK_THRESHOLD = 0.5

GAP_MARKER = "MISSING"

REPORT_JSONL = "ablation.jsonl"
REPORT_TABLE = "ablation.txt"
STAGE1_REPORT = "stage1.json"

METHOD_WITH_AMCM = "with-amcm"
METHOD_WITHOUT_AMCM = "without-amcm"
METHOD_CHROMA_KEY = "chroma-key"

# FVD and LPIPS need pretrained feature networks; these are reported instead.
PROXY_NOTE = (
    "FVD/LPIPS not computed; alpha IoU, PSNR over black, artifact escape ratio, "
    "edge fringe and temporal flicker are reported as proxies"
)
