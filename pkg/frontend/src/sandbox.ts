/** Sandboxed preview for generated simulations.
 *
 * The generated script runs with `allow-scripts` only: no same-origin access,
 * so it cannot reach the app origin, its storage, or the API.
 */

export const SANDBOX_ATTRIBUTES = "allow-scripts";

export function sandboxedPreviewHtml(document: string): string {
  const encoded = btoa(unescape(encodeURIComponent(document)));
  return (
    `<iframe class="sim-preview" sandbox="${SANDBOX_ATTRIBUTES}" ` +
    `src="data:text/html;base64,${encoded}"></iframe>`
  );
}

/** True when iframe attributes keep the preview isolated from our origin. */
export function isIsolated(sandboxAttribute: string): boolean {
  const tokens = sandboxAttribute.split(/\s+/).filter(Boolean);
  return tokens.includes("allow-scripts") && !tokens.includes("allow-same-origin");
}
