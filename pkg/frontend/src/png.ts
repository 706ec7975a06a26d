/**
 * Minimal PNG decoder for the service's images: 8-bit grayscale,
 * non-interlaced, as produced by the slice and preview endpoints.
 *
 * The zlib step is injected so the module works both under node
 * (zlib.inflateSync) and in the browser (DecompressionStream).
 */

export type Inflate = (compressed: Uint8Array) => Uint8Array;

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major, one byte per pixel
}

const PNG_SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

function readU32(bytes: Uint8Array, offset: number): number {
  return (
    ((bytes[offset]! << 24) | (bytes[offset + 1]! << 16) | (bytes[offset + 2]! << 8) | bytes[offset + 3]!) >>> 0
  );
}

export function decodeGrayPng(bytes: Uint8Array, inflate: Inflate): GrayImage {
  for (let i = 0; i < PNG_SIGNATURE.length; i++) {
    if (bytes[i] !== PNG_SIGNATURE[i]) throw new Error("not a PNG file");
  }
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  let offset = 8;
  while (offset < bytes.length) {
    const length = readU32(bytes, offset);
    const type = String.fromCharCode(...bytes.subarray(offset + 4, offset + 8));
    const data = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = readU32(data, 0);
      height = readU32(data, 4);
      const bitDepth = data[8];
      const colorType = data[9];
      const interlace = data[12];
      if (bitDepth !== 8 || colorType !== 0 || interlace !== 0) {
        throw new Error(
          `unsupported PNG layout: depth=${bitDepth} color=${colorType} interlace=${interlace}`,
        );
      }
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length; // length + type + data + crc
  }
  const compressed = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let at = 0;
  for (const chunk of idat) {
    compressed.set(chunk, at);
    at += chunk.length;
  }
  const raw = inflate(compressed);

  const stride = width + 1; // one filter byte per scanline, 1 byte per pixel
  const pixels = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * stride]!;
    const row = raw.subarray(y * stride + 1, y * stride + 1 + width);
    const out = pixels.subarray(y * width, (y + 1) * width);
    const prev = y > 0 ? pixels.subarray((y - 1) * width, y * width) : null;
    for (let x = 0; x < width; x++) {
      const a = x > 0 ? out[x - 1]! : 0; // left
      const b = prev ? prev[x]! : 0; // up
      const c = x > 0 && prev ? prev[x - 1]! : 0; // up-left
      let value: number;
      switch (filter) {
        case 0:
          value = row[x]!;
          break;
        case 1:
          value = row[x]! + a;
          break;
        case 2:
          value = row[x]! + b;
          break;
        case 3:
          value = row[x]! + ((a + b) >> 1);
          break;
        case 4: {
          const p = a + b - c;
          const pa = Math.abs(p - a);
          const pb = Math.abs(p - b);
          const pc = Math.abs(p - c);
          const paeth = pa <= pb && pa <= pc ? a : pb <= pc ? b : c;
          value = row[x]! + paeth;
          break;
        }
        default:
          throw new Error(`unknown PNG filter ${filter}`);
      }
      out[x] = value & 0xff;
    }
  }
  return { width, height, pixels };
}

/** Mean absolute pixel difference in [0, 1] units. */
export function meanAbsDiff(a: GrayImage, b: GrayImage): number {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error("image sizes differ");
  }
  let sum = 0;
  for (let i = 0; i < a.pixels.length; i++) {
    sum += Math.abs(a.pixels[i]! - b.pixels[i]!);
  }
  return sum / a.pixels.length / 255;
}
