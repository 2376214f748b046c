/** Completion backends: an OpenAI-compatible endpoint, or canned files. */

import { readFileSync, existsSync } from 'node:fs';
import { join } from 'node:path';
import { GameVariant, RequestKind } from './wire.js';

export interface CompletionQuery {
  kind: RequestKind;
  templateId: string;
  variant: GameVariant;
  prompt: string;
  temperature: number;
}

export interface Backend {
  complete(query: CompletionQuery): Promise<string>;
}

export interface EndpointConfig {
  endpoint: string;
  model: string;
  apiKeyEnvVar: string;
  maxRetries: number;
}

interface ChatCompletionReply {
  choices?: Array<{ message?: { content?: string } }>;
}

export class OpenAICompatibleBackend implements Backend {
  constructor(private readonly config: EndpointConfig) {
    if (!config.endpoint || !config.model) {
      throw new Error('endpoint and model must be nonempty');
    }
    if (config.maxRetries < 0) throw new Error('retries must be >= 0');
  }

  async complete(query: CompletionQuery): Promise<string> {
    const apiKey = process.env[this.config.apiKeyEnvVar] ?? '';
    const body = JSON.stringify({
      model: this.config.model,
      temperature: query.temperature,
      messages: [{ role: 'user', content: query.prompt }],
    });
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= this.config.maxRetries; attempt += 1) {
      try {
        const reply = await fetch(`${this.config.endpoint}/chat/completions`, {
          method: 'POST',
          headers: {
            'Content-Type': 'application/json',
            Authorization: `Bearer ${apiKey}`,
          },
          body,
        });
        if (!reply.ok) throw new Error(`endpoint returned ${reply.status}`);
        const doc = (await reply.json()) as ChatCompletionReply;
        const content = doc.choices?.[0]?.message?.content;
        if (typeof content !== 'string') throw new Error('no completion content');
        return content;
      } catch (error) {
        lastError = error;
      }
    }
    throw new Error(`completion failed after retries: ${String(lastError)}`);
  }
}

/** Offline backend reading canned completions from a directory.
 *
 * Lookup order: <templateId>.txt, <kind>.<variant>.txt, <kind>.txt. */
export class StubBackend implements Backend {
  constructor(private readonly directory: string) {}

  async complete(query: CompletionQuery): Promise<string> {
    const names = [
      `${query.templateId}.txt`,
      `${query.kind}.${query.variant}.txt`,
      `${query.kind}.txt`,
    ];
    for (const name of names) {
      const path = join(this.directory, name);
      if (existsSync(path)) return readFileSync(path, 'utf-8');
    }
    throw new Error(`no canned completion for ${query.kind}/${query.templateId}`);
  }
}
