/**
 * HTTP transport: POST a request object to any path for a response object;
 * GET serves the handshake. The handshake is also printed to stdout at
 * startup (with the bound port, useful with --port 0).
 */
import * as http from 'node:http';

import { ConfigError, parseArgs } from './config';
import { PROTOCOL_NAME, serializeResponse } from './protocol';
import { StubAdapter } from './stub';

const MAX_BODY_BYTES = 1 << 20;

function main(): void {
  let adapter: StubAdapter;
  let concurrency: number;
  let port: number;
  try {
    const parsed = parseArgs(process.argv.slice(2));
    adapter = new StubAdapter(parsed.config, parsed.options);
    concurrency = parsed.config.concurrency;
    port = parsed.port;
  } catch (err) {
    if (err instanceof ConfigError) {
      process.stderr.write(`sgec-backend: ${err.message}\n`);
      process.exit(2);
    }
    throw err;
  }

  const handshake = (boundPort: number) =>
    JSON.stringify({
      protocol: PROTOCOL_NAME,
      concurrency,
      descriptor: adapter.descriptor(),
      port: boundPort,
    });

  const server = http.createServer((req, res) => {
    const reply = (status: number, body: string) => {
      res.writeHead(status, { 'Content-Type': 'application/json' });
      res.end(body);
    };
    if (req.method === 'GET') {
      reply(200, handshake((server.address() as { port: number }).port));
      return;
    }
    if (req.method !== 'POST') {
      reply(405, serializeResponse({ error: `unsupported method ${req.method}` }));
      return;
    }
    const chunks: Buffer[] = [];
    let size = 0;
    req.on('data', (chunk: Buffer) => {
      size += chunk.length;
      if (size > MAX_BODY_BYTES) {
        reply(413, serializeResponse({ error: 'request body too large' }));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on('end', () => {
      if (res.writableEnded) return;
      const body = Buffer.concat(chunks).toString('utf-8');
      reply(200, serializeResponse(adapter.handleLine(body)));
    });
    req.on('error', () => {
      if (!res.writableEnded) {
        reply(400, serializeResponse({ error: 'request stream error' }));
      }
    });
  });

  server.listen(port, '127.0.0.1', () => {
    const bound = (server.address() as { port: number }).port;
    process.stdout.write(handshake(bound) + '\n');
  });
}

main();
