import { describe, expect, it } from "vitest";

import { parseConllu } from "../src/conllu";

const SAMPLE = `# sent_id = 1
# text = Dogs bark.
1\tDogs\tdog\tNOUN\t_\t_\t0\troot\t_\t_
2\tbark\tbark\tVERB\t_\t_\t1\t_\t_\t_
3\t.\t.\tPUNCT\t_\t_\t1\t_\t_\t_

1\tHallo\thallo\tINTJ\t_\t_\t0\troot\t_\t_
`;

describe("parseConllu", () => {
  it("extracts surface and UPOS per sentence", () => {
    const sentences = parseConllu(SAMPLE);
    expect(sentences).toHaveLength(2);
    expect(sentences[0]).toEqual([
      { surface: "Dogs", upos: "NOUN" },
      { surface: "bark", upos: "VERB" },
      { surface: ".", upos: "PUNCT" },
    ]);
    expect(sentences[1][0].surface).toBe("Hallo");
  });

  it("skips multiword ranges and empty nodes", () => {
    const content = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\tde\tADP\t_\t_\t0\t_\t_\t_\n2.1\tnull\t_\tX\t_\t_\t_\t_\t_\t_\n2\tel\tel\tDET\t_\t_\t0\t_\t_\t_\n";
    const [tokens] = parseConllu(content);
    expect(tokens.map((t) => t.surface)).toEqual(["de", "el"]);
  });

  it("rejects malformed lines", () => {
    expect(() => parseConllu("not a conllu line")).toThrow(/malformed/);
    expect(() => parseConllu("x\tform\tlemma\tNOUN\t_\t_\t_\t_\t_\t_")).toThrow(/token id/);
  });
});
