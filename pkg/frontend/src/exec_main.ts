/**
 * Exec transport: handshake line on stdout, then one JSON response line per
 * JSON request line read from stdin. Exits non-zero only on startup
 * failures; per-request problems become {"error": ...} responses.
 */
import * as readline from 'node:readline';

import { ConfigError, parseArgs } from './config';
import { PROTOCOL_NAME, serializeResponse } from './protocol';
import { StubAdapter } from './stub';

function main(): void {
  let adapter: StubAdapter;
  let concurrency: number;
  try {
    const { config, options } = parseArgs(process.argv.slice(2));
    adapter = new StubAdapter(config, options);
    concurrency = config.concurrency;
    if (config.augment !== undefined) {
      // opaque pass-through: surfaced for operators, never interpreted
      process.stderr.write(`augmentation config: ${JSON.stringify(config.augment)}\n`);
    }
  } catch (err) {
    if (err instanceof ConfigError) {
      process.stderr.write(`sgec-backend: ${err.message}\n`);
      process.exit(2);
    }
    throw err;
  }

  process.stdout.write(
    JSON.stringify({
      protocol: PROTOCOL_NAME,
      concurrency,
      descriptor: adapter.descriptor(),
    }) + '\n',
  );

  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line: string) => {
    if (!line.trim()) {
      process.stdout.write(serializeResponse({ error: 'empty request line' }) + '\n');
      return;
    }
    process.stdout.write(serializeResponse(adapter.handleLine(line)) + '\n');
  });
  rl.on('close', () => process.exit(0));
}

main();
