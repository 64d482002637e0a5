/**
 * Local fixture server for integration tests: static files plus dynamic
 * endpoints exercising UA echo, per-visit volatility, and an intentional
 * UA gate returning 403 to None-browsers.
 */

import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import { existsSync, readFileSync } from "node:fs";
import { join, normalize } from "node:path";

export class PortInUse extends Error {}

const MIME: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript",
  ".css": "text/css",
  ".png": "image/png",
};

export interface FixtureServer {
  server: Server;
  port: number;
  url: (path: string) => string;
  close: () => Promise<void>;
}

function handle(root: string, req: IncomingMessage, res: ServerResponse): void {
  const ua = req.headers["user-agent"] ?? "";
  const path = (req.url ?? "/").split("?")[0];

  if (path === "/ua-echo") {
    res.writeHead(200, { "content-type": MIME[".html"] });
    res.end(`<html><body><h1>Your agent</h1><p id="ua">${escapeHtml(String(ua))}</p></body></html>`);
    return;
  }
  if (path === "/dynamic") {
    const now = Math.floor(Date.now() / 1000);
    res.writeHead(200, { "content-type": MIME[".html"] });
    res.end(`<html><body><p>epoch</p><span id="t">${now}</span></body></html>`);
    return;
  }
  if (path === "/gate") {
    if (ua === "None") {
      res.writeHead(403, { "content-type": MIME[".html"] });
      res.end("<html><body><h1>403 Forbidden</h1><p>complete the CAPTCHA to continue</p></body></html>");
      return;
    }
    res.writeHead(200, { "content-type": MIME[".html"] });
    res.end("<html><body><h1>Members area</h1><p>welcome through the gate</p></body></html>");
    return;
  }

  const file = normalize(join(root, path === "/" ? "index.html" : path.slice(1)));
  if (!file.startsWith(normalize(root)) || !existsSync(file)) {
    res.writeHead(404, { "content-type": MIME[".html"] });
    res.end("<html><body><h1>404</h1></body></html>");
    return;
  }
  const ext = file.slice(file.lastIndexOf("."));
  res.writeHead(200, { "content-type": MIME[ext] ?? "application/octet-stream" });
  res.end(readFileSync(file));
}

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function serveFixtures(root: string, port = 0): Promise<FixtureServer> {
  return new Promise((resolve, reject) => {
    const server = createServer((req, res) => handle(root, req, res));
    server.once("error", (err: NodeJS.ErrnoException) => {
      reject(err.code === "EADDRINUSE" ? new PortInUse(`port ${port} in use`) : err);
    });
    server.listen(port, "127.0.0.1", () => {
      const bound = (server.address() as { port: number }).port;
      resolve({
        server,
        port: bound,
        url: (path: string) => `http://127.0.0.1:${bound}${path}`,
        close: () => new Promise<void>((done) => server.close(() => done())),
      });
    });
  });
}
