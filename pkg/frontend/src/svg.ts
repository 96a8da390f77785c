/** Minimal deterministic SVG string assembly. */

export type Attrs = Record<string, string | number>;

/** Fixed-precision coordinate formatting keeps repeated renders identical. */
export function fmt(value: number): string {
  const text = value.toFixed(2);
  return text === "-0.00" ? "0.00" : text;
}

/** Compact general-purpose number formatting for labels. */
export function fmtLabel(value: number): string {
  if (value === 0) return "0";
  return String(parseFloat(value.toPrecision(3)));
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function el(tag: string, attrs: Attrs, body = ""): string {
  const parts = Object.entries(attrs).map(
    ([key, value]) => `${key}="${typeof value === "number" ? fmt(value) : value}"`,
  );
  const open = `<${tag}${parts.length ? " " + parts.join(" ") : ""}`;
  return body === "" ? `${open}/>` : `${open}>${body}</${tag}>`;
}

export function text(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return el("text", { x, y, "font-family": "sans-serif", ...attrs }, esc(content));
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

/** Diverging blue-white-red shading for signed errors, t in [-1, 1]. */
export function divergingColour(t: number): string {
  const clamp = Math.max(-1, Math.min(1, t));
  const blue = [49, 54, 149];
  const red = [165, 0, 38];
  const target = clamp < 0 ? blue : red;
  const s = Math.abs(clamp);
  const channels = target.map((c) => Math.round(255 + (c - 255) * s));
  return `rgb(${channels[0]},${channels[1]},${channels[2]})`;
}
