/** Minimal PNG codec on top of node:zlib.
 *
 * Decodes 8-bit greyscale, greyscale+alpha, RGB and RGBA images without
 * interlacing, which covers the corpus images this tool is pointed at.
 * Anything else throws and the caller records the file in the skip report.
 * The encoder exists for the test suite to fabricate inputs.
 */

import * as zlib from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples in [0, 255]. */
  data: Uint8Array;
}

const CHANNELS_BY_COLOR_TYPE: Record<number, number> = { 0: 1, 2: 3, 4: 2, 6: 4 };

export function decodePng(buffer: Buffer): RgbImage {
  if (buffer.length < 8 || !buffer.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("not a PNG file");
  }
  let offset = 8;
  let width = 0;
  let height = 0;
  let colorType = -1;
  const idat: Buffer[] = [];
  while (offset < buffer.length) {
    const length = buffer.readUInt32BE(offset);
    const kind = buffer.toString("ascii", offset + 4, offset + 8);
    const body = buffer.subarray(offset + 8, offset + 8 + length);
    if (kind === "IHDR") {
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      const bitDepth = body.readUInt8(8);
      colorType = body.readUInt8(9);
      const interlace = body.readUInt8(12);
      if (bitDepth !== 8) throw new Error(`unsupported bit depth ${bitDepth}`);
      if (!(colorType in CHANNELS_BY_COLOR_TYPE)) throw new Error(`unsupported color type ${colorType}`);
      if (interlace !== 0) throw new Error("interlaced PNG not supported");
    } else if (kind === "IDAT") {
      idat.push(body);
    } else if (kind === "IEND") {
      break;
    }
    offset += 12 + length; // length + kind + body + crc
  }
  if (width === 0 || height === 0 || idat.length === 0) {
    throw new Error("missing IHDR or IDAT");
  }

  const channels = CHANNELS_BY_COLOR_TYPE[colorType];
  const stride = width * channels;
  const raw = zlib.inflateSync(Buffer.concat(idat));
  if (raw.length !== (stride + 1) * height) {
    throw new Error("corrupt pixel data");
  }

  const pixels = new Uint8Array(stride * height);
  let previous: Uint8Array | null = null;
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const line = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const out = pixels.subarray(y * stride, (y + 1) * stride);
    unfilterLine(filter, line, out, previous, channels);
    previous = out;
  }

  const rgb = new Uint8Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    const src = i * channels;
    if (channels >= 3) {
      rgb[i * 3] = pixels[src];
      rgb[i * 3 + 1] = pixels[src + 1];
      rgb[i * 3 + 2] = pixels[src + 2];
    } else {
      rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = pixels[src];
    }
  }
  return { width, height, data: rgb };
}

function unfilterLine(
  filter: number,
  line: Uint8Array,
  out: Uint8Array,
  previous: Uint8Array | null,
  channels: number,
): void {
  const left = (i: number) => (i >= channels ? out[i - channels] : 0);
  const up = (i: number) => (previous ? previous[i] : 0);
  const upLeft = (i: number) => (previous && i >= channels ? previous[i - channels] : 0);
  switch (filter) {
    case 0:
      out.set(line);
      return;
    case 1:
      for (let i = 0; i < line.length; i++) out[i] = (line[i] + left(i)) & 0xff;
      return;
    case 2:
      for (let i = 0; i < line.length; i++) out[i] = (line[i] + up(i)) & 0xff;
      return;
    case 3:
      for (let i = 0; i < line.length; i++) out[i] = (line[i] + ((left(i) + up(i)) >> 1)) & 0xff;
      return;
    case 4:
      for (let i = 0; i < line.length; i++) out[i] = (line[i] + paeth(left(i), up(i), upLeft(i))) & 0xff;
      return;
    default:
      throw new Error(`unknown filter ${filter}`);
  }
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(chunks: Buffer[]): number {
  let c = 0xffffffff;
  for (const chunk of chunks) {
    for (let i = 0; i < chunk.length; i++) {
      c = CRC_TABLE[(c ^ chunk[i]) & 0xff] ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(kind: string, body: Buffer): Buffer {
  const header = Buffer.alloc(4);
  header.writeUInt32BE(body.length, 0);
  const kindBuf = Buffer.from(kind, "ascii");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32([kindBuf, body]), 0);
  return Buffer.concat([header, kindBuf, body, crc]);
}

/** Encode row-major RGB triples as an 8-bit non-interlaced PNG. */
export function encodePng(image: RgbImage): Buffer {
  const { width, height, data } = image;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr.writeUInt8(8, 8); // bit depth
  ihdr.writeUInt8(2, 9); // RGB
  const stride = width * 3;
  const raw = Buffer.alloc((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter: none
    raw.set(data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", zlib.deflateSync(raw, { level: 9 })),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}
