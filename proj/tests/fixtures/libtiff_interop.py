#!/usr/bin/env python3
# Copyright 2026 The cogstream Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Cross-checks our TIFF codecs against libtiff, driven through ctypes.

  libtiff_interop.py generate DIR   write libtiff-encoded fixtures + reference.raw
  libtiff_interop.py verify DIR     decode every *.tif in DIR with libtiff and
                                    compare against DIR/reference.raw

reference.raw is the raster as little-endian uint16, row-major, bands
interleaved, preceded by three little-endian uint32s: width, height, bands.
Exit status 77 means no usable libtiff was found (ctest treats it as skip).
"""

import ctypes
import ctypes.util
import glob
import os
import struct
import sys

SKIP = 77

TAG_IMAGEWIDTH = 256
TAG_IMAGELENGTH = 257
TAG_BITSPERSAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_SAMPLESPERPIXEL = 277
TAG_ROWSPERSTRIP = 278
TAG_PLANARCONFIG = 284
TAG_PREDICTOR = 317
TAG_TILEWIDTH = 322
TAG_TILELENGTH = 323
TAG_EXTRASAMPLES = 338
TAG_SAMPLEFORMAT = 339

WIDTH, HEIGHT, BANDS, TILE = 100, 70, 3, 32


def load_libtiff():
    candidates = []
    found = ctypes.util.find_library("tiff")
    if found:
        candidates.append(found)
    candidates += glob.glob("/usr/lib/x86_64-linux-gnu/libtiff.so*")
    for path in candidates:
        try:
            lib = ctypes.CDLL(path)
        except OSError:
            continue
        lib.TIFFOpen.restype = ctypes.c_void_p
        lib.TIFFOpen.argtypes = [ctypes.c_char_p, ctypes.c_char_p]
        lib.TIFFClose.argtypes = [ctypes.c_void_p]
        lib.TIFFWriteEncodedTile.restype = ctypes.c_ssize_t
        lib.TIFFWriteEncodedTile.argtypes = [ctypes.c_void_p, ctypes.c_uint32, ctypes.c_void_p, ctypes.c_ssize_t]
        lib.TIFFWriteEncodedStrip.restype = ctypes.c_ssize_t
        lib.TIFFWriteEncodedStrip.argtypes = [ctypes.c_void_p, ctypes.c_uint32, ctypes.c_void_p, ctypes.c_ssize_t]
        lib.TIFFReadEncodedTile.restype = ctypes.c_ssize_t
        lib.TIFFReadEncodedTile.argtypes = [ctypes.c_void_p, ctypes.c_uint32, ctypes.c_void_p, ctypes.c_ssize_t]
        lib.TIFFComputeTile.restype = ctypes.c_uint32
        lib.TIFFComputeTile.argtypes = [ctypes.c_void_p, ctypes.c_uint32, ctypes.c_uint32, ctypes.c_uint32, ctypes.c_uint16]
        lib.TIFFIsTiled.argtypes = [ctypes.c_void_p]
        lib.TIFFIsCODECConfigured.argtypes = [ctypes.c_uint16]
        lib.TIFFSetField.restype = ctypes.c_int
        lib.TIFFGetField.restype = ctypes.c_int
        return lib
    return None


def reference_samples():
    out = []
    for y in range(HEIGHT):
        for x in range(WIDTH):
            for b in range(BANDS):
                v = (x * 131 + y * 71 + b * 1000 + (x * y) % 97) & 0xFFFF
                if (x // 8 + y // 8) % 5 == 0:
                    v = 40000 + b  # flat blocks give LZW/Deflate repeats to chew on
                out.append(v)
    return out


def write_reference(path, samples, width=WIDTH, height=HEIGHT, bands=BANDS):
    with open(path, "wb") as f:
        f.write(struct.pack("<3I", width, height, bands))
        f.write(struct.pack("<%dH" % len(samples), *samples))


def read_reference(path):
    with open(path, "rb") as f:
        data = f.read()
    width, height, bands = struct.unpack_from("<3I", data, 0)
    n = width * height * bands
    return width, height, bands, list(struct.unpack_from("<%dH" % n, data, 12))


def set_common(lib, tif, width, height, bands, compression, predictor):
    i = ctypes.c_int
    lib.TIFFSetField(tif, i(TAG_IMAGEWIDTH), ctypes.c_uint32(width))
    lib.TIFFSetField(tif, i(TAG_IMAGELENGTH), ctypes.c_uint32(height))
    lib.TIFFSetField(tif, i(TAG_BITSPERSAMPLE), i(16))
    lib.TIFFSetField(tif, i(TAG_SAMPLESPERPIXEL), i(bands))
    lib.TIFFSetField(tif, i(TAG_PHOTOMETRIC), i(1))
    lib.TIFFSetField(tif, i(TAG_PLANARCONFIG), i(1))
    lib.TIFFSetField(tif, i(TAG_SAMPLEFORMAT), i(1))
    if bands > 1:
        extra = (ctypes.c_uint16 * (bands - 1))(*([0] * (bands - 1)))
        lib.TIFFSetField(tif, i(TAG_EXTRASAMPLES), i(bands - 1), extra)
    lib.TIFFSetField(tif, i(TAG_COMPRESSION), i(compression))
    if predictor != 1:
        lib.TIFFSetField(tif, i(TAG_PREDICTOR), i(predictor))


def write_tiled(lib, path, samples, compression, predictor, mode):
    tif = ctypes.c_void_p(lib.TIFFOpen(path.encode(), mode.encode()))
    if not tif.value:
        raise RuntimeError("TIFFOpen failed for " + path)
    i = ctypes.c_int
    set_common(lib, tif, WIDTH, HEIGHT, BANDS, compression, predictor)
    lib.TIFFSetField(tif, i(TAG_TILEWIDTH), ctypes.c_uint32(TILE))
    lib.TIFFSetField(tif, i(TAG_TILELENGTH), ctypes.c_uint32(TILE))
    tiles_x = (WIDTH + TILE - 1) // TILE
    tiles_y = (HEIGHT + TILE - 1) // TILE
    for ty in range(tiles_y):
        for tx in range(tiles_x):
            tile = [0] * (TILE * TILE * BANDS)
            for y in range(TILE):
                for x in range(TILE):
                    gx, gy = tx * TILE + x, ty * TILE + y
                    if gx >= WIDTH or gy >= HEIGHT:
                        continue
                    src = (gy * WIDTH + gx) * BANDS
                    dst = (y * TILE + x) * BANDS
                    tile[dst:dst + BANDS] = samples[src:src + BANDS]
            buf = (ctypes.c_uint16 * len(tile))(*tile)  # host order; libtiff swaps
            index = lib.TIFFComputeTile(tif, tx * TILE, ty * TILE, 0, 0)
            if lib.TIFFWriteEncodedTile(tif, index, buf, len(tile) * 2) < 0:
                raise RuntimeError("TIFFWriteEncodedTile failed")
    lib.TIFFClose(tif)


def write_striped(lib, path, samples):
    tif = ctypes.c_void_p(lib.TIFFOpen(path.encode(), b"w"))
    set_common(lib, tif, WIDTH, HEIGHT, BANDS, 1, 1)
    lib.TIFFSetField(tif, ctypes.c_int(TAG_ROWSPERSTRIP), ctypes.c_uint32(HEIGHT))
    buf = (ctypes.c_uint16 * len(samples))(*samples)
    lib.TIFFWriteEncodedStrip(tif, 0, buf, len(samples) * 2)
    lib.TIFFClose(tif)


def generate(out_dir):
    lib = load_libtiff()
    if lib is None:
        print("libtiff not found")
        return SKIP
    os.makedirs(out_dir, exist_ok=True)
    samples = reference_samples()
    write_reference(os.path.join(out_dir, "reference.raw"), samples)
    plan = [
        ("libtiff_none.tif", 1, 1, "wl"),
        ("libtiff_lzw_pred2.tif", 5, 2, "wl"),
        ("libtiff_lzw.tif", 5, 1, "wl"),
        ("libtiff_deflate.tif", 8, 1, "wl"),
        ("libtiff_deflate_pred2.tif", 8, 2, "wl"),
        ("libtiff_zstd.tif", 50000, 1, "wl"),
        ("libtiff_be_lzw_pred2.tif", 5, 2, "wb"),
        ("libtiff_bigtiff_deflate.tif", 8, 1, "w8l"),
        ("libtiff_bigtiff_be_zstd.tif", 50000, 2, "w8b"),
    ]
    for name, compression, predictor, mode in plan:
        write_tiled(lib, os.path.join(out_dir, name), samples, compression, predictor, mode)
    write_striped(lib, os.path.join(out_dir, "libtiff_striped.tif"), samples)
    return 0


def read_tiled(lib, path):
    tif = ctypes.c_void_p(lib.TIFFOpen(path.encode(), b"r"))
    if not tif.value:
        raise RuntimeError("libtiff cannot open " + path)
    if not lib.TIFFIsTiled(tif):
        raise RuntimeError(path + " is not tiled")
    u32 = ctypes.c_uint32
    u16 = ctypes.c_uint16
    width, height, tw, th = u32(), u32(), u32(), u32()
    spp = u16()
    lib.TIFFGetField(tif, ctypes.c_int(TAG_IMAGEWIDTH), ctypes.byref(width))
    lib.TIFFGetField(tif, ctypes.c_int(TAG_IMAGELENGTH), ctypes.byref(height))
    lib.TIFFGetField(tif, ctypes.c_int(TAG_TILEWIDTH), ctypes.byref(tw))
    lib.TIFFGetField(tif, ctypes.c_int(TAG_TILELENGTH), ctypes.byref(th))
    lib.TIFFGetField(tif, ctypes.c_int(TAG_SAMPLESPERPIXEL), ctypes.byref(spp))
    W, H, TW, TH, B = width.value, height.value, tw.value, th.value, spp.value
    out = [0] * (W * H * B)
    buf = (ctypes.c_uint16 * (TW * TH * B))()
    for ty in range(0, H, TH):
        for tx in range(0, W, TW):
            index = lib.TIFFComputeTile(tif, tx, ty, 0, 0)
            if lib.TIFFReadEncodedTile(tif, index, buf, TW * TH * B * 2) < 0:
                raise RuntimeError("libtiff failed to decode tile %d of %s" % (index, path))
            for y in range(min(TH, H - ty)):
                row = buf[y * TW * B:(y * TW + min(TW, W - tx)) * B]
                dst = ((ty + y) * W + tx) * B
                out[dst:dst + len(row)] = row
    lib.TIFFClose(tif)
    return W, H, B, out


def verify(in_dir):
    lib = load_libtiff()
    if lib is None:
        print("libtiff not found")
        return SKIP
    width, height, bands, expected = read_reference(os.path.join(in_dir, "reference.raw"))
    files = sorted(glob.glob(os.path.join(in_dir, "*.tif")))
    if not files:
        print("no .tif files in", in_dir)
        return 1
    failures = 0
    for path in files:
        try:
            W, H, B, got = read_tiled(lib, path)
        except RuntimeError as err:
            print("FAIL", os.path.basename(path), err)
            failures += 1
            continue
        if (W, H, B) != (width, height, bands) or got != expected:
            print("FAIL", os.path.basename(path), "pixels differ")
            failures += 1
        else:
            print("ok  ", os.path.basename(path))
    return 1 if failures else 0


def main(argv):
    if len(argv) != 3 or argv[1] not in ("generate", "verify"):
        print(__doc__)
        return 2
    return generate(argv[2]) if argv[1] == "generate" else verify(argv[2])


if __name__ == "__main__":
    sys.exit(main(sys.argv))
