/** Deterministic RNG for training: splitmix64 (BigInt) behind a small API. */

const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const K1 = 0xbf58476d1ce4e5b9n;
const K2 = 0x94d049bb133111ebn;

function mix64(z: bigint): bigint {
  z &= MASK;
  z ^= z >> 30n;
  z = (z * K1) & MASK;
  z ^= z >> 27n;
  z = (z * K2) & MASK;
  return z ^ (z >> 31n);
}

export class Rng {
  private state: bigint;
  private spareNormal: number | null = null;

  constructor(seed: number) {
    this.state = mix64(BigInt(seed));
  }

  private next64(): bigint {
    this.state = (this.state + GOLDEN) & MASK;
    return mix64(this.state);
  }

  /** Uniform in [0, 1) with 53-bit resolution. */
  uniform(): number {
    return Number(this.next64() >> 11n) / 2 ** 53;
  }

  /** Integer in [0, n). */
  int(n: number): number {
    return Math.floor(this.uniform() * n);
  }

  /** Standard normal via Box-Muller. */
  normal(): number {
    if (this.spareNormal !== null) {
      const v = this.spareNormal;
      this.spareNormal = null;
      return v;
    }
    let u1 = this.uniform();
    while (u1 === 0) u1 = this.uniform();
    const u2 = this.uniform();
    const r = Math.sqrt(-2 * Math.log(u1));
    this.spareNormal = r * Math.sin(2 * Math.PI * u2);
    return r * Math.cos(2 * Math.PI * u2);
  }

  /** In-place Fisher-Yates shuffle. */
  shuffle(arr: Int32Array): void {
    for (let i = arr.length - 1; i > 0; i--) {
      const j = this.int(i + 1);
      const tmp = arr[i];
      arr[i] = arr[j];
      arr[j] = tmp;
    }
  }
}
