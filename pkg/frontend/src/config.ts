/**
 * Adapter configuration and command-line parsing shared by both transports.
 *
 * Only the deterministic stub engine ships here; pointing --model at a real
 * speech or GEC model is a documented extension that needs an ML runtime,
 * so it fails at startup with a clear message rather than pretending.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

export class ConfigError extends Error {}

export interface AdapterConfig {
  /** Model identifier; "stub" is the only engine bundled with the adapter. */
  model: string;
  /** Device hint, forwarded to real engines; informational for the stub. */
  device: string;
  /** Decoding beam width; must be at least 1. */
  beamWidth: number;
  /** When true the decoder consumes the request's prompt field. */
  enablePrompt: boolean;
  /** Opaque augmentation settings (e.g. mask counts), forwarded untouched. */
  augment: unknown;
  /** Maximum concurrent requests declared in the handshake. */
  concurrency: number;
}

export type StubMode = 'echo' | 'upper';

export interface StubOptions {
  mode: StubMode;
  script?: Record<string, unknown>;
  scriptName?: string;
  /** Fabricate one-second sentence spans for the response text. */
  sentences: boolean;
}

export interface ParsedArgs {
  config: AdapterConfig;
  options: StubOptions;
  port: number;
}

const DEFAULT_BEAM_WIDTH = 5;

export function parseArgs(argv: string[]): ParsedArgs {
  const config: AdapterConfig = {
    model: 'stub',
    device: 'cpu',
    beamWidth: DEFAULT_BEAM_WIDTH,
    enablePrompt: false,
    augment: undefined,
    concurrency: 1,
  };
  const options: StubOptions = { mode: 'echo', sentences: false };
  let port = 0;

  const take = (i: number, flag: string): string => {
    const value = argv[i + 1];
    if (value === undefined) throw new ConfigError(`${flag} needs a value`);
    return value;
  };

  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    switch (flag) {
      case '--model':
        config.model = take(i++, flag);
        break;
      case '--device':
        config.device = take(i++, flag);
        break;
      case '--beam-width':
        config.beamWidth = Number(take(i++, flag));
        break;
      case '--enable-prompt':
        config.enablePrompt = true;
        break;
      case '--augment':
        try {
          config.augment = JSON.parse(take(i++, flag));
        } catch {
          throw new ConfigError('--augment must be a JSON blob');
        }
        break;
      case '--concurrency':
        config.concurrency = Number(take(i++, flag));
        break;
      case '--mode': {
        const mode = take(i++, flag);
        if (mode !== 'echo' && mode !== 'upper') {
          throw new ConfigError(`unknown --mode ${mode}; use echo or upper`);
        }
        options.mode = mode;
        break;
      }
      case '--script': {
        const scriptPath = take(i++, flag);
        options.script = loadScript(scriptPath);
        options.scriptName = path.basename(scriptPath);
        break;
      }
      case '--sentences':
        options.sentences = true;
        break;
      case '--port':
        port = Number(take(i++, flag));
        break;
      default:
        throw new ConfigError(`unknown flag ${flag}`);
    }
  }

  validateConfig(config);
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new ConfigError('--port must be an integer in [0, 65535]');
  }
  return { config, options, port };
}

export function validateConfig(config: AdapterConfig): void {
  if (!Number.isInteger(config.beamWidth) || config.beamWidth < 1) {
    throw new ConfigError(`beam width must be an integer >= 1, got ${config.beamWidth}`);
  }
  if (!Number.isInteger(config.concurrency) || config.concurrency < 1) {
    throw new ConfigError('concurrency must be an integer >= 1');
  }
  if (config.model !== 'stub') {
    throw new ConfigError(
      `model '${config.model}' needs an external ML runtime; ` +
        'this adapter bundles only the deterministic stub (--model stub)',
    );
  }
}

function loadScript(scriptPath: string): Record<string, unknown> {
  let text: string;
  try {
    text = fs.readFileSync(scriptPath, 'utf-8');
  } catch (err) {
    throw new ConfigError(`cannot read script ${scriptPath}: ${(err as Error).message}`);
  }
  let decoded: unknown;
  try {
    decoded = JSON.parse(text);
  } catch {
    throw new ConfigError(`script ${scriptPath} is not valid JSON`);
  }
  if (typeof decoded !== 'object' || decoded === null || Array.isArray(decoded)) {
    throw new ConfigError(`script ${scriptPath} must be an object mapping ids to responses`);
  }
  return decoded as Record<string, unknown>;
}
