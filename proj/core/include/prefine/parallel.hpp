#pragma once

namespace prefine {

// Worker count for the data-parallel loops (distance rows, Jaccard rows,
// brute-force enumeration). Changing it never changes output bits: every
// parallel loop writes disjoint cells and sums in a fixed order.
void set_thread_count(int threads);
int thread_count();

}  // namespace prefine
