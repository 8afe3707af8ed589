// Inline SVG sparkline for the recent VWAP history.

export function sparklinePoints(
  values: number[],
  width = 140,
  height = 36,
  pad = 2,
): string {
  if (values.length === 0) return "";
  if (values.length === 1) {
    return `${pad},${height / 2} ${width - pad},${height / 2}`;
  }
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min;
  const stepX = (width - 2 * pad) / (values.length - 1);
  return values
    .map((v, i) => {
      const x = pad + i * stepX;
      const y = span === 0 ? height / 2 : pad + (1 - (v - min) / span) * (height - 2 * pad);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function sparklineSvg(values: number[], width = 140, height = 36): string {
  const points = sparklinePoints(values, width, height);
  return (
    `<svg class="sparkline" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">` +
    `<polyline fill="none" stroke="currentColor" stroke-width="1.5" points="${points}"/></svg>`
  );
}
