// Minimal decoder for the server's depth images: 16-bit grayscale PNG,
// base64-encoded, depth in 0.1 mm units. Browsers cannot read 16-bit
// PNGs through <img>/canvas without precision loss, hence this decoder.

export const DEPTH_SCALE = 10000; // units per meter
export const CAMERA_HEIGHT_M = 0.5;

export interface DepthImage {
  width: number;
  height: number;
  data: Uint16Array; // row-major, 0.1 mm units
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}

async function inflate(data: Uint8Array): Promise<Uint8Array> {
  const ds = new DecompressionStream("deflate"); // zlib-wrapped, per PNG spec
  const stream = new Blob([data as BlobPart]).stream().pipeThrough(ds);
  const buf = await new Response(stream).arrayBuffer();
  return new Uint8Array(buf);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export async function decodeDepthPng(b64: string): Promise<DepthImage> {
  const bytes = base64ToBytes(b64);
  const sig = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== sig[i]) throw new Error("not a PNG");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let off = 8;
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  while (off < bytes.length) {
    const len = view.getUint32(off);
    const type = String.fromCharCode(...bytes.subarray(off + 4, off + 8));
    const data = bytes.subarray(off + 8, off + 8 + len);
    if (type === "IHDR") {
      width = view.getUint32(off + 8);
      height = view.getUint32(off + 12);
      const bitDepth = bytes[off + 16];
      const colorType = bytes[off + 17];
      const interlace = bytes[off + 20];
      if (bitDepth !== 16 || colorType !== 0 || interlace !== 0) {
        throw new Error(
          `unsupported PNG: depth=${bitDepth} color=${colorType} interlace=${interlace}`,
        );
      }
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + len;
  }
  if (!width || !height) throw new Error("missing IHDR");
  const zdata = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let zo = 0;
  for (const c of idat) {
    zdata.set(c, zo);
    zo += c.length;
  }
  const raw = await inflate(zdata);

  const bpp = 2; // one 16-bit gray sample
  const stride = width * bpp;
  const out = new Uint16Array(width * height);
  const prev = new Uint8Array(stride);
  const cur = new Uint8Array(stride);
  let ro = 0;
  for (let y = 0; y < height; y++) {
    const filter = raw[ro++];
    for (let x = 0; x < stride; x++) {
      const rx = raw[ro + x];
      const a = x >= bpp ? cur[x - bpp] : 0;
      const b = prev[x];
      const c = x >= bpp ? prev[x - bpp] : 0;
      let v: number;
      switch (filter) {
        case 0: v = rx; break;
        case 1: v = rx + a; break;
        case 2: v = rx + b; break;
        case 3: v = rx + ((a + b) >> 1); break;
        case 4: v = rx + paeth(a, b, c); break;
        default: throw new Error(`bad PNG filter ${filter}`);
      }
      cur[x] = v & 0xff;
    }
    ro += stride;
    for (let x = 0; x < width; x++) {
      out[y * width + x] = (cur[2 * x] << 8) | cur[2 * x + 1]; // big-endian
    }
    prev.set(cur);
  }
  return { width, height, data: out };
}

/** Height above the bin floor in meters for one depth sample. */
export function heightMeters(raw: number): number {
  return CAMERA_HEIGHT_M - raw / DEPTH_SCALE;
}
