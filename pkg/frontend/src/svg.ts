/** Minimal deterministic SVG assembly: same input, same bytes. */

export type Attrs = Record<string, string | number>;

export function fmt(value: number): string {
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tag(name: string, attrs: Attrs, body = ""): string {
  const parts = Object.entries(attrs).map(
    ([key, value]) =>
      `${key}="${typeof value === "number" ? fmt(value) : esc(value)}"`,
  );
  const head = parts.length > 0 ? `${name} ${parts.join(" ")}` : name;
  return body.length > 0 ? `<${head}>${body}</${name}>` : `<${head}/>`;
}

export function text(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return tag("text", { x, y, ...attrs }, esc(content));
}

export function svgDocument(width: number, height: number, body: string[]): string {
  const attrs =
    `xmlns="http://www.w3.org/2000/svg" width="${fmt(width)}" ` +
    `height="${fmt(height)}" viewBox="0 0 ${fmt(width)} ${fmt(height)}" ` +
    `font-family="sans-serif"`;
  return `<svg ${attrs}>\n${body.join("\n")}\n</svg>\n`;
}
