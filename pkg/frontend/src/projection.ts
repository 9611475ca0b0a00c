/** Fixed random 2-D projection of embeddings, stable for a whole session. */

export function hashString(text: string): number {
  // FNV-1a, 32-bit
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class Projection {
  readonly dimension: number;
  private readonly axes: [number[], number[]];

  constructor(seed: number, dimension: number) {
    if (dimension < 1) throw new Error(`dimension must be positive, got ${dimension}`);
    this.dimension = dimension;
    const rand = mulberry32(seed);
    const axis = () => {
      const row: number[] = [];
      let norm = 0;
      for (let i = 0; i < dimension; i++) {
        // Box-Muller keeps directions uniform in high dimension
        const u = Math.max(rand(), 1e-12);
        const v = rand();
        const g = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
        row.push(g);
        norm += g * g;
      }
      norm = Math.sqrt(norm) || 1;
      return row.map((x) => x / norm);
    };
    this.axes = [axis(), axis()];
  }

  static forSession(sessionId: string, dimension: number): Projection {
    return new Projection(hashString(sessionId), dimension);
  }

  project(embedding: number[]): [number, number] {
    if (embedding.length !== this.dimension) {
      throw new Error(`expected ${this.dimension} components, got ${embedding.length}`);
    }
    let x = 0;
    let y = 0;
    for (let i = 0; i < embedding.length; i++) {
      const value = embedding[i] ?? 0;
      x += value * (this.axes[0][i] ?? 0);
      y += value * (this.axes[1][i] ?? 0);
    }
    return [x, y];
  }
}

/** Scatter the encounter's views into a small fixed-viewport SVG. */
export function glyphSvg(
  projection: Projection,
  views: number[][],
  size = 120
): string {
  const points = views.map((v) => projection.project(v));
  if (points.length === 0) {
    return `<svg class="glyphs" viewBox="0 0 ${size} ${size}"></svg>`;
  }
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const span = Math.max(maxX - minX, maxY - minY, 1e-9);
  const pad = 12;
  const scale = (size - 2 * pad) / span;
  const circles = points
    .map(([x, y], i) => {
      const cx = pad + (x - minX) * scale;
      const cy = pad + (y - minY) * scale;
      return `<circle cx="${cx.toFixed(1)}" cy="${cy.toFixed(1)}" r="5"><title>view ${i}</title></circle>`;
    })
    .join("");
  return `<svg class="glyphs" viewBox="0 0 ${size} ${size}">${circles}</svg>`;
}
