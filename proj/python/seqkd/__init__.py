# python/seqkd/__init__.py
#
# Copyright 2026  The seqkd authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Arabic transcription toolkit: normalization, error rates, error triage
and sequence distillation models."""

try:
    from ._seqkd import (  # installed wheel keeps the module in-package
        Model,
        ModelConfig,
        SeqkdError,
        cer,
        edit_distance,
        flag_errors,
        normalize,
        read_corpus,
        select_layers,
        tokenize,
        wer,
    )
except ImportError:
    from _seqkd import (  # build tree exposes it via PYTHONPATH
        Model,
        ModelConfig,
        SeqkdError,
        cer,
        edit_distance,
        flag_errors,
        normalize,
        read_corpus,
        select_layers,
        tokenize,
        wer,
    )

__all__ = [
    "Model",
    "ModelConfig",
    "SeqkdError",
    "cer",
    "edit_distance",
    "flag_errors",
    "normalize",
    "read_corpus",
    "select_layers",
    "tokenize",
    "wer",
]
