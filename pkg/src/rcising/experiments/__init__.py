from .avoidance import AvoidanceResult, averaged_avoidance, avoidance_estimate
from .bubbles import BubbleProfile, ConstantReport, bubble_sums, constant_relation_report
from .chi import BETA_C_EXTERNAL, ScanResult, ScanRow, chi_scan_and_fit, fit_amplitude
from .iic import IicScan, iic_stabilization_scan
from .mixing import MixingDeltas, mixing_probe
from .regular import RegularScales, ScaleVerdict, regular_scale_detect
from .twopoint import TwoPointTable, canonical

__all__ = [
    "AvoidanceResult", "averaged_avoidance", "avoidance_estimate", "BubbleProfile", "ConstantReport",
    "bubble_sums", "constant_relation_report", "BETA_C_EXTERNAL", "ScanResult", "ScanRow", "chi_scan_and_fit",
    "fit_amplitude", "IicScan", "iic_stabilization_scan", "MixingDeltas", "mixing_probe", "RegularScales",
    "ScaleVerdict", "regular_scale_detect", "TwoPointTable", "canonical",
]
