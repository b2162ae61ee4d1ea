# Copyright 2026 The ctcocr Authors.
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

"""Segmentation-free captcha recognition (CRNN + CTC), C++ core."""

from ._ctcocr import (
    DEFAULT_ALPHABET,
    ConfigError,
    DataError,
    DomainError,
    Error,
    IntegrityError,
    Recognizer,
    ShapeError,
    VersionError,
    beam_decode,
    char_accuracy,
    collapse,
    ctc_gradient,
    ctc_loss,
    edit_distance,
    greedy_decode,
    min_frames,
    synthesize,
    word_accuracy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
