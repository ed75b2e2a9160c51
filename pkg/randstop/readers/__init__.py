from randstop.readers.result_reader import ResultReader, RunReader, parse_row
