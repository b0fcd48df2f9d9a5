from .dataset import Dataset, load_files, write_shards
from .example import Example, dequantize, quantize
from .proto import WireError, decode_example, encode_frame_example, encode_video_example
from .records import RecordError, parse_record_stream, read_records, write_record_stream, write_records
from .split import PARTS, DatasetSplit, split_files
from .synth import SynthSpec, SynthTruth, paired_correlation, synth_generate

__all__ = [
    "Dataset", "DatasetSplit", "Example", "PARTS", "RecordError", "SynthSpec", "SynthTruth", "WireError",
    "decode_example", "dequantize", "encode_frame_example", "encode_video_example", "load_files",
    "paired_correlation", "parse_record_stream", "quantize", "read_records", "split_files",
    "synth_generate", "write_record_stream", "write_records", "write_shards",
]
