# Copyright 2026 The ttslab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Transformer GANs for time series.

Signal sets, simulators and preprocessing; conditional transformer GAN
training and sampling; wavelet-coherence scoring; projections, fusion maps
and the downstream classification case study.
"""

from ._ttslab import (
    BoundsError,
    ConfigError,
    LoadError,
    NormalizationError,
    SignalSet,
    Trainer,
    TrainingError,
    UsageError,
    balanced_labels,
    case_study,
    class_counts,
    compute_metrics,
    crop_window,
    fusion_map,
    generate,
    load,
    normalize_channels,
    project_2d,
    resample_balanced,
    run_cli,
    save,
    simulate_bands,
    simulate_sine,
    split_per_class,
    wcoh,
    wcoh_s,
    wcoh_set,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
