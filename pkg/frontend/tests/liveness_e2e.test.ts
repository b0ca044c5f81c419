// Liveness against a real two-node network: a listing created on the
// OTHER node becomes visible in this browser's DOM within one push
// period plus one poll interval.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { NodeClient } from "../src/api";
import { MarketController } from "../src/market";
import { createMarketStore } from "../src/state";
import type { MarketViewState } from "../src/views";
import { renderMarket } from "../src/views";
import { Backend } from "./harness";

const PERIOD_S = 3.0;
const POLL_S = 1.0;
// Theoretical bound is period + poll; half a second covers process
// scheduling and two HTTP hops on the CI box.
const JITTER_S = 0.5;

const backend = new Backend();
let nodeA: { apiUrl: string; listenAddr: string };
let nodeB: { apiUrl: string };

beforeAll(async () => {
  await backend.startDoor();
  nodeA = await backend.startNode("live-a", "ui-live-a", { periodS: PERIOD_S });
  nodeB = await backend.startNode("live-b", "ui-live-b", {
    periodS: PERIOD_S,
    bootstrap: [nodeA.listenAddr],
  });
}, 120_000);

afterAll(() => {
  backend.stop();
});

describe("market browser liveness", () => {
  it("a listing from the second node appears within period + one poll", async () => {
    const store = createMarketStore();
    const controller = new MarketController(new NodeClient(nodeB.apiUrl), store);
    const root = document.createElement("div");
    document.body.append(root);
    const view: MarketViewState = {
      openChatChannel: null,
      openChatListing: null,
      formErrors: {},
      notice: null,
    };
    const noop = {
      onCreate: () => {},
      onRemove: () => {},
      onBid: () => {},
      onOpenChat: () => {},
      onSendChat: () => {},
    };
    store.subscribe((state) => renderMarket(root, state, view, noop));
    controller.start();

    try {
      const title = `live probe ${Date.now()}`;
      const created = await new NodeClient(nodeA.apiUrl).createListing({
        title,
        description: "",
        price_amount: 100,
        currency: "EUR",
        ttl_s: 3600,
      });
      const posted = Date.now();

      const deadlineMs = (PERIOD_S + POLL_S + JITTER_S) * 1000;
      let visibleAfterMs = Number.POSITIVE_INFINITY;
      while (Date.now() - posted < deadlineMs + 1000) {
        const rowInDom = root.querySelector(
          `tr[data-content-id="${created.content_id}"]`,
        );
        if (rowInDom !== null) {
          visibleAfterMs = Date.now() - posted;
          expect(rowInDom.textContent).toContain(title);
          break;
        }
        await new Promise((resolve) => setTimeout(resolve, 25));
      }
      expect(visibleAfterMs).toBeLessThanOrEqual(deadlineMs);

      // Remove on the owner node: the tombstone clears this browser too.
      await new NodeClient(nodeA.apiUrl).removeListing(created.content_id);
      const removedAt = Date.now();
      let goneAfterMs = Number.POSITIVE_INFINITY;
      while (Date.now() - removedAt < deadlineMs + 1000) {
        if (
          root.querySelector(`tr[data-content-id="${created.content_id}"]`) === null
        ) {
          goneAfterMs = Date.now() - removedAt;
          break;
        }
        await new Promise((resolve) => setTimeout(resolve, 25));
      }
      expect(goneAfterMs).toBeLessThanOrEqual(deadlineMs);
    } finally {
      controller.stop();
    }
  }, 60_000);

  it("own listings poll in within one interval and carry the mine flag", async () => {
    const store = createMarketStore();
    const controller = new MarketController(new NodeClient(nodeB.apiUrl), store);
    controller.start();
    try {
      const created = await new NodeClient(nodeB.apiUrl).createListing({
        title: "own listing",
        description: "",
        price_amount: 5,
        currency: "EUR",
        ttl_s: 3600,
      });
      const posted = Date.now();
      while (Date.now() - posted < (POLL_S + JITTER_S) * 1000 + 500) {
        const row = store
          .get()
          .listings.find((r) => r.content_id === created.content_id);
        if (row) {
          expect(row.mine).toBe(true);
          return;
        }
        await new Promise((resolve) => setTimeout(resolve, 25));
      }
      throw new Error("own listing never appeared in the store");
    } finally {
      controller.stop();
    }
  }, 30_000);
});
