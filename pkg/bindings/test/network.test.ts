import assert from "node:assert/strict";
import { test } from "node:test";

import { Network } from "../src/index.js";
import { mulberry32, randomTensor, referenceEinsum } from "./reference.js";

test("Network: contractPath, autotune, contract lifecycle", () => {
  const rand = mulberry32(13);
  const a = randomTensor([2, 4], rand);
  const b = randomTensor([4, 8], rand);
  const c = randomTensor([8, 16], rand);
  const net = new Network("ij,jk,kl->il", [a, b, c], { samples: 4 });
  try {
    const path = net.contractPath();
    assert.equal(path.flops, 320); // cheap association of the chain
    assert.equal(path.overhead, 1.0);
    net.autotune();
    const out = net.contract();
    assert.ok(out.maxAbsDiff(referenceEinsum("ij,jk,kl->il", [a, b, c])) < 1e-10);
  } finally {
    net.release();
  }
});

test("Network options are immutable after the first contraction", () => {
  const rand = mulberry32(14);
  const a = randomTensor([2, 2], rand);
  const b = randomTensor([2, 2], rand);
  const net = new Network("ij,jk->ik", [a, b]);
  try {
    net.contract();
    assert.throws(() => net.configure({ samples: 2 }), /immutable/);
    assert.throws(() => net.autotune(), /immutable/);
  } finally {
    net.release();
  }
});

test("released networks reject further use", () => {
  const rand = mulberry32(15);
  const net = new Network("i,i->", [randomTensor([3], rand), randomTensor([3], rand)]);
  net.release();
  assert.throws(() => net.contract(), /released/);
});
