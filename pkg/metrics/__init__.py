from .stream_metrics import RankBandMetrics, MarginMeter
