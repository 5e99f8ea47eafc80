/** Image-to-vector pipeline: preprocessing, convolutional backbone, pooled head.
 *
 * The backbone is a three-stage strided convolution stack whose weights are
 * drawn once from a fixed seed, standing in for a pretrained encoder in
 * offline environments; the final fully connected head is freshly seeded per
 * run (and untrained), so its seed fully determines the output vectors for a
 * given image set.
 */

import { RgbImage } from "./png";
import { gaussian, mulberry32 } from "./rng";

export const INPUT_SIZE = 224;
const RESIZE_SHORT = 256;
const MEAN = [0.485, 0.456, 0.406];
const STD = [0.229, 0.224, 0.225];

const BACKBONE_SEED = 0x5eed;
const STAGE_CHANNELS = [3, 8, 16, 32];

export interface Tensor3 {
  channels: number;
  height: number;
  width: number;
  data: Float64Array; // [c][y][x]
}

function tensor(channels: number, height: number, width: number): Tensor3 {
  return { channels, height, width, data: new Float64Array(channels * height * width) };
}

function at(t: Tensor3, c: number, y: number, x: number): number {
  return t.data[(c * t.height + y) * t.width + x];
}

/** Bilinear resize of the shorter side to RESIZE_SHORT, then center crop. */
export function preprocess(image: RgbImage): Tensor3 {
  const scale = RESIZE_SHORT / Math.min(image.width, image.height);
  const rw = Math.max(INPUT_SIZE, Math.round(image.width * scale));
  const rh = Math.max(INPUT_SIZE, Math.round(image.height * scale));
  const resized = tensor(3, rh, rw);
  for (let y = 0; y < rh; y++) {
    const sy = Math.min(((y + 0.5) * image.height) / rh - 0.5, image.height - 1);
    const y0 = Math.max(0, Math.floor(sy));
    const y1 = Math.min(image.height - 1, y0 + 1);
    const fy = sy - y0;
    for (let x = 0; x < rw; x++) {
      const sx = Math.min(((x + 0.5) * image.width) / rw - 0.5, image.width - 1);
      const x0 = Math.max(0, Math.floor(sx));
      const x1 = Math.min(image.width - 1, x0 + 1);
      const fx = sx - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = image.data[(y0 * image.width + x0) * 3 + c];
        const p01 = image.data[(y0 * image.width + x1) * 3 + c];
        const p10 = image.data[(y1 * image.width + x0) * 3 + c];
        const p11 = image.data[(y1 * image.width + x1) * 3 + c];
        const top = p00 + (p01 - p00) * fx;
        const bottom = p10 + (p11 - p10) * fx;
        resized.data[(c * rh + y) * rw + x] = (top + (bottom - top) * fy) / 255;
      }
    }
  }

  const offY = Math.floor((rh - INPUT_SIZE) / 2);
  const offX = Math.floor((rw - INPUT_SIZE) / 2);
  const out = tensor(3, INPUT_SIZE, INPUT_SIZE);
  for (let c = 0; c < 3; c++) {
    for (let y = 0; y < INPUT_SIZE; y++) {
      for (let x = 0; x < INPUT_SIZE; x++) {
        const value = at(resized, c, y + offY, x + offX);
        out.data[(c * INPUT_SIZE + y) * INPUT_SIZE + x] = (value - MEAN[c]) / STD[c];
      }
    }
  }
  return out;
}

interface ConvStage {
  inChannels: number;
  outChannels: number;
  /** [out][in][3][3] flattened, He-scaled. */
  weights: Float64Array;
}

function buildBackbone(): ConvStage[] {
  const uniform = mulberry32(BACKBONE_SEED);
  const normal = gaussian(uniform);
  const stages: ConvStage[] = [];
  for (let s = 0; s + 1 < STAGE_CHANNELS.length; s++) {
    const inChannels = STAGE_CHANNELS[s];
    const outChannels = STAGE_CHANNELS[s + 1];
    const fanIn = inChannels * 9;
    const weights = new Float64Array(outChannels * fanIn);
    const scale = Math.sqrt(2 / fanIn);
    for (let i = 0; i < weights.length; i++) weights[i] = normal() * scale;
    stages.push({ inChannels, outChannels, weights });
  }
  return stages;
}

const BACKBONE = buildBackbone();

/** 3x3 convolution (zero padded), ReLU, then 2x2 mean pool with stride 2. */
function convStage(input: Tensor3, stage: ConvStage): Tensor3 {
  const { height, width } = input;
  const conv = tensor(stage.outChannels, height, width);
  for (let o = 0; o < stage.outChannels; o++) {
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        let acc = 0;
        for (let i = 0; i < stage.inChannels; i++) {
          const wBase = (o * stage.inChannels + i) * 9;
          for (let ky = -1; ky <= 1; ky++) {
            const yy = y + ky;
            if (yy < 0 || yy >= height) continue;
            for (let kx = -1; kx <= 1; kx++) {
              const xx = x + kx;
              if (xx < 0 || xx >= width) continue;
              acc += stage.weights[wBase + (ky + 1) * 3 + (kx + 1)] * at(input, i, yy, xx);
            }
          }
        }
        conv.data[(o * height + y) * width + x] = acc > 0 ? acc : 0;
      }
    }
  }
  const ph = height >> 1;
  const pw = width >> 1;
  const pooled = tensor(stage.outChannels, ph, pw);
  for (let c = 0; c < stage.outChannels; c++) {
    for (let y = 0; y < ph; y++) {
      for (let x = 0; x < pw; x++) {
        pooled.data[(c * ph + y) * pw + x] =
          (at(conv, c, 2 * y, 2 * x) +
            at(conv, c, 2 * y, 2 * x + 1) +
            at(conv, c, 2 * y + 1, 2 * x) +
            at(conv, c, 2 * y + 1, 2 * x + 1)) /
          4;
      }
    }
  }
  return pooled;
}

/** Average pool an arbitrary feature map down to a fixed pool x pool grid. */
export function adaptiveAveragePool(input: Tensor3, pool: number): Float64Array {
  const out = new Float64Array(input.channels * pool * pool);
  for (let c = 0; c < input.channels; c++) {
    for (let py = 0; py < pool; py++) {
      const y0 = Math.floor((py * input.height) / pool);
      const y1 = Math.max(y0 + 1, Math.floor(((py + 1) * input.height) / pool));
      for (let px = 0; px < pool; px++) {
        const x0 = Math.floor((px * input.width) / pool);
        const x1 = Math.max(x0 + 1, Math.floor(((px + 1) * input.width) / pool));
        let acc = 0;
        for (let y = y0; y < y1; y++) {
          for (let x = x0; x < x1; x++) acc += at(input, c, y, x);
        }
        out[(c * pool + py) * pool + px] = acc / ((y1 - y0) * (x1 - x0));
      }
    }
  }
  return out;
}

export interface Head {
  dim: number;
  pool: number;
  seed: number;
  weights: Float64Array; // [dim][inDim]
  inDim: number;
}

/** Fresh fully connected head; untrained, fully determined by its seed. */
export function buildHead(dim: number, pool: number, seed: number): Head {
  const inDim = STAGE_CHANNELS[STAGE_CHANNELS.length - 1] * pool * pool;
  const normal = gaussian(mulberry32(seed >>> 0));
  const weights = new Float64Array(dim * inDim);
  const scale = 1 / Math.sqrt(inDim);
  for (let i = 0; i < weights.length; i++) weights[i] = normal() * scale;
  return { dim, pool, seed, weights, inDim };
}

/** Full pipeline: preprocess, backbone stages, adaptive pool, linear head. */
export function extractVector(image: RgbImage, head: Head): Float64Array {
  let features = preprocess(image);
  for (const stage of BACKBONE) {
    features = convStage(features, stage);
  }
  const pooled = adaptiveAveragePool(features, head.pool);
  const out = new Float64Array(head.dim);
  for (let d = 0; d < head.dim; d++) {
    let acc = 0;
    for (let i = 0; i < head.inDim; i++) acc += head.weights[d * head.inDim + i] * pooled[i];
    if (!Number.isFinite(acc)) throw new Error("non-finite feature value");
    out[d] = acc;
  }
  return out;
}
