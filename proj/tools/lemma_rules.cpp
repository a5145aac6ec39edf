// Reads one word per line, prints "word<TAB>rule_lemma(word)".
#include <iostream>
#include <string>

#include "bankbench/textprep.hpp"

int main() {
    std::string word;
    while (std::getline(std::cin, word)) {
        std::cout << word << '\t' << bankbench::rule_lemma(word) << '\n';
    }
}
