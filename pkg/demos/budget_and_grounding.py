"""Two safety rails in isolation: the token budget that trims retrieved
context before any request is sent, and the citation report that flags
references to papers the corpus does not hold.

    python3 demos/budget_and_grounding.py
"""

from paperchat.chat import ground_citations, retrieve_context
from paperchat.corpus import Corpus, estimate_tokens, ingest_text
from paperchat.embed import EmbeddingCache, MockEmbeddingBackend, embed_texts
from paperchat.errors import ContextOverflow
from paperchat.vindex import VectorIndex, add_vectors, chunk_document


def build_fixture():
    corpus = Corpus()
    texts = {
        "Oort (1927)": "Differential rotation of the galactic disk measured "
        "from radial velocities of nearby stars. " * 12,
        "Lindblad (1925)": "Epicyclic orbits and the kinematics of star "
        "streams in a rotating stellar system. " * 12,
        "Kawata et al. (2018)": "Radial migration traced with open cluster "
        "abundances across the disk. " * 12,
    }
    backend = MockEmbeddingBackend(dimension=64)
    cache = EmbeddingCache()
    index = VectorIndex(64)
    chunks = {}
    for key, text in texts.items():
        doc = corpus.add(ingest_text(text.strip(), key, key))
        for chunk in chunk_document(doc):
            chunks[chunk.chunk_id] = chunk
    vectors = embed_texts([c.text for c in chunks.values()], backend, cache)
    add_vectors(index, list(zip(chunks.keys(), vectors)))
    keys = {doc.doc_id: doc.citation_key for doc in corpus}

    def embed_one(text):
        return embed_texts([text], backend, cache)[0]

    return corpus, index, chunks, keys, embed_one


def main() -> None:
    corpus, index, chunks, keys, embed_one = build_fixture()
    question = "How was differential rotation first measured?"

    print("== budgeted retrieval ==")
    for allowance in (4096, 400, 220):
        try:
            context = retrieve_context(
                question, index, chunks, keys, embed_one, k=3,
                budget_remaining=allowance,
            )
        except ContextOverflow as exc:
            print(f"  allowance {allowance:5d} tokens -> ContextOverflow: {exc}")
            continue
        kept = [chunk.chunk_id for _, chunk in context.hits]
        print(f"  allowance {allowance:5d} tokens -> {len(kept)} chunks kept "
              f"({context.total_token_estimate} tokens of context)")
    single = chunks[next(iter(chunks))]
    print(f"  (each chunk is ~{estimate_tokens(single.text)} tokens; "
          "shrinking the allowance drops the lowest-scoring hits first, and "
          "an allowance below the single best hit refuses the turn)")

    print("== citation grounding ==")
    answer = (
        "Differential rotation was established by Oort (1927), building on "
        "the kinematic framework of Lindblad (1925); the cluster-based "
        "migration claim of Fictitious et al. (2099) is not in the corpus."
    )
    report = ground_citations(answer, corpus)
    print(f"  detected:   {list(report.detected)}")
    print(f"  grounded:   {list(report.grounded)}")
    print(f"  ungrounded: {list(report.ungrounded)}")


if __name__ == "__main__":
    main()
