#!/usr/bin/env python3
# Copyright 2026 The hefl Authors
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
"""Writes the synthetic device traces shipped under data/traces."""

import argparse
import csv
import math
import pathlib
import random

HEADER = ["compute_speed", "bandwidth_bps", "base_train_time_s"]


def clip(v, lo, hi):
    return max(lo, min(hi, v))


def device_rows(n, seed):
    rng = random.Random(seed)
    rows = []
    for _ in range(n):
        speed = clip(rng.lognormvariate(0.0, 0.6), 0.15, 4.0)
        # Bandwidth loosely tracks device class.
        bw = clip(rng.lognormvariate(math.log(12.5e6) + 0.5 * math.log(speed), 0.7), 1e6, 1.25e8)
        train = clip(rng.lognormvariate(math.log(20.0), 0.2), 5.0, 80.0)
        rows.append((round(speed, 4), round(bw), round(train, 3)))
    return rows


def two_class_rows(n_slow, n_fast):
    slow = (0.7, 14_000_000, 20.0)
    fast = (1.0, 20_000_000, 20.0)
    return [slow] * n_slow + [fast] * n_fast


def write(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="data/traces", type=pathlib.Path)
    p.add_argument("--seed", default=20240601, type=int)
    args = p.parse_args()
    write(args.out / "devices_1000.csv", device_rows(1000, args.seed))
    write(args.out / "two_class_20.csv", two_class_rows(10, 10))


if __name__ == "__main__":
    main()
