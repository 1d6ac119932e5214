/**
 * Deterministic stub engine behind the backend wire protocol.
 *
 * Three behaviors, all bit-deterministic: replay a script of canned
 * responses keyed by request id, echo the request text, or uppercase it.
 * With --sentences the stub fabricates one-second sentence spans from the
 * response text so timestamp-consuming stages can be exercised without an
 * aligner.
 */
import { AdapterConfig, StubOptions } from './config';
import {
  BackendRequest,
  BackendResponse,
  SentenceSpan,
  parseRequestLine,
} from './protocol';

const SENTENCE_TERMINALS = new Set(['.', '?', '!']);
const FABRICATED_SENTENCE_SECONDS = 1.0;

export function fabricateSentences(text: string): SentenceSpan[] {
  const pieces: string[] = [];
  let buf = '';
  for (const ch of text) {
    buf += ch;
    if (SENTENCE_TERMINALS.has(ch)) {
      pieces.push(buf.trim());
      buf = '';
    }
  }
  if (buf.trim()) pieces.push(buf.trim());
  return pieces
    .filter((piece) => piece.length > 0)
    .map((piece, k) => ({
      start: k * FABRICATED_SENTENCE_SECONDS,
      end: (k + 1) * FABRICATED_SENTENCE_SECONDS,
      text: piece,
    }));
}

export class StubAdapter {
  constructor(
    readonly config: AdapterConfig,
    readonly options: StubOptions,
  ) {}

  /** Name used in handshakes and, downstream, in manifest provenance. */
  descriptor(): string {
    if (this.options.script) return `script:${this.options.scriptName}`;
    return this.options.mode;
  }

  /** Handle one raw request line; never throws. */
  handleLine(line: string): BackendResponse {
    const parsed = parseRequestLine(line);
    if ('error' in parsed) return parsed;
    return this.respond(parsed);
  }

  respond(request: BackendRequest): BackendResponse {
    if (this.options.script) {
      const entry = this.options.script[request.id] ?? this.options.script['*'];
      if (entry === undefined) {
        return { error: `no scripted response for ${request.id}` };
      }
      return entry as BackendResponse;
    }
    if (request.text === undefined && request.audio === undefined) {
      return { error: 'no input' };
    }
    let text = request.text ?? '';
    if (this.options.mode === 'upper') text = text.toUpperCase();
    if (this.config.enablePrompt && request.prompt) {
      // prompt-aware decoding, stub style: the prompt visibly conditions
      // the output so tests can assert it was consumed
      text = text ? `${request.prompt} ${text}` : request.prompt;
    }
    const response: BackendResponse = { text };
    if (this.options.sentences) {
      response.sentences = fabricateSentences(text);
    }
    return response;
  }
}
