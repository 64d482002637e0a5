/**
 * None-browser identity overrides.
 *
 * The UA request header is replaced with the literal string "None" at the
 * context level; the script below rewrites the navigator identity fields
 * before any page script runs, and pins navigator.webdriver to false so
 * the instrumented browser is not flagged as a bot.
 */

export const NONE_UA = "None";

export const NAVIGATOR_IDENTITY_FIELDS = [
  "appVersion",
  "platform",
  "userAgent",
  "vendor",
] as const;

export function noneModeInitScript(): string {
  const overrides = NAVIGATOR_IDENTITY_FIELDS.map(
    (field) =>
      `Object.defineProperty(Navigator.prototype, ${JSON.stringify(field)}, ` +
      `{ get: () => ${JSON.stringify(NONE_UA)}, configurable: true });`,
  ).join("\n");
  return (
    overrides +
    "\nObject.defineProperty(Navigator.prototype, 'webdriver', " +
    "{ get: () => false, configurable: true });"
  );
}
