/**
 * Minimal SVG sparkline: turns a time-series buffer into a polyline path,
 * breaking the line at gap markers. No canvas, so it renders (and tests)
 * in headless DOM implementations.
 */

import { Sample } from "./ring_buffer.js";

export interface SparklineOptions {
  width: number;
  height: number;
  pad?: number;
}

/** SVG path string for the samples; gap samples start a new subpath. */
export function sparklinePath(samples: readonly Sample[], opts: SparklineOptions): string {
  if (samples.length === 0) {
    return "";
  }
  const pad = opts.pad ?? 2;
  const w = opts.width - 2 * pad;
  const h = opts.height - 2 * pad;
  const t0 = samples[0].t;
  const t1 = samples[samples.length - 1].t;
  const tSpan = t1 - t0 || 1;
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of samples) {
    lo = Math.min(lo, s.value);
    hi = Math.max(hi, s.value);
  }
  const vSpan = hi - lo || 1;

  const parts: string[] = [];
  let pen = false;
  for (const s of samples) {
    const x = (pad + ((s.t - t0) / tSpan) * w).toFixed(1);
    const y = (pad + (1 - (s.value - lo) / vSpan) * h).toFixed(1);
    if (!pen || s.gap) {
      parts.push(`M${x} ${y}`);
      pen = true;
    } else {
      parts.push(`L${x} ${y}`);
    }
  }
  return parts.join(" ");
}

export function renderSparkline(svg: SVGElement, samples: readonly Sample[], opts: SparklineOptions): void {
  svg.setAttribute("viewBox", `0 0 ${opts.width} ${opts.height}`);
  let path = svg.querySelector("path");
  if (path === null) {
    path = svg.ownerDocument.createElementNS("http://www.w3.org/2000/svg", "path");
    svg.appendChild(path);
  }
  path.setAttribute("d", sparklinePath(samples, opts));
}
