# Copyright 2026 The DMiner Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the dminer C++ core."""

from ._dminer import (
    DminerError,
    anchor_pseudo_pool,
    average_pool,
    default_fpn_config,
    evaluate,
    gaussian_radius,
    gradcheck,
    keep1,
    pgcl_loss,
    pseudo_labels,
    render_target,
    splg_loss,
    train_demo,
)

__all__ = [
    "DminerError",
    "anchor_pseudo_pool",
    "average_pool",
    "default_fpn_config",
    "evaluate",
    "gaussian_radius",
    "gradcheck",
    "keep1",
    "pgcl_loss",
    "pseudo_labels",
    "render_target",
    "splg_loss",
    "train_demo",
]
